#include "drc/autodiff.hpp"

#include <algorithm>
#include <cmath>

#include "drc/error.hpp"

namespace drc::ad {

namespace {

Tape& tape_of(Var a) {
  if (!a.valid()) throw ContractError("operation on an unbound variable");
  return *a.tape;
}

Tape& same_tape(Var a, Var b) {
  Tape& t = tape_of(a);
  if (&t != &tape_of(b)) throw ContractError("variables belong to different tapes");
  return t;
}

[[noreturn]] void shape_mismatch(const char* op, const Tensor& a, const Tensor& b) {
  throw ShapeError(std::string(op) + ": incompatible shapes " + a.shape_str() + " and " +
                   b.shape_str());
}

void require_rank2(const char* op, const Tensor& a) {
  if (a.rank() != 2) throw ShapeError(std::string(op) + ": expected rank-2 tensor, got " + a.shape_str());
}

constexpr double kGeluC = 0.7978845608028654;  // sqrt(2/pi)
constexpr double kGeluA = 0.044715;

}  // namespace

const Tensor& Var::value() const {
  if (!valid()) throw ContractError("value() on an unbound variable");
  return tape->value(id);
}

Var Tape::leaf(Tensor value) {
  nodes_.push_back({"leaf", std::move(value), {}, nullptr, true});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::constant(Tensor value) {
  nodes_.push_back({"constant", std::move(value), {}, nullptr, false});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Var Tape::record(const char* op, Tensor value, std::vector<int> inputs, Backward backward) {
  if (!value.all_finite()) {
    throw NumericError(std::string(op) + ": non-finite value in result of shape " + value.shape_str());
  }
  bool needs = false;
  for (int in : inputs) needs = needs || nodes_[in].requires_grad;
  nodes_.push_back({op, std::move(value), std::move(inputs), needs ? std::move(backward) : nullptr, needs});
  return {this, static_cast<int>(nodes_.size()) - 1};
}

Gradients Tape::backward(Var loss) const {
  if (loss.tape != this) throw ContractError("backward: loss was not produced on this tape");
  const Tensor& lv = nodes_[loss.id].value;
  if (lv.size() != 1) throw ContractError("backward: loss must be scalar, got shape " + lv.shape_str());
  Gradients grads(*this);
  if (!nodes_[loss.id].requires_grad) return grads;
  grads.at(loss.id)[0] = 1.0;
  for (int id = loss.id; id >= 0; --id) {
    const Node& n = nodes_[id];
    if (!n.backward || !grads.has(id)) continue;
    n.backward(*this, id, grads);
  }
  return grads;
}

Tensor& Gradients::at(int id) {
  Tensor& g = grads_[id];
  if (g.empty()) g = Tensor(tape_->value(id).shape(), 0.0);
  return g;
}

Tensor Gradients::of(Var v) const {
  if (!grads_[v.id].empty()) return grads_[v.id];
  return Tensor(tape_->value(v.id).shape(), 0.0);
}

// ---- linear algebra ---------------------------------------------------------

Var matmul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul", av);
  require_rank2("matmul", bv);
  if (av.cols() != bv.rows()) shape_mismatch("matmul", av, bv);
  Tensor out = Tensor::matrix(av.rows(), bv.cols());
  out.mat().noalias() = av.mat() * bv.mat();
  const int ia = a.id, ib = b.id;
  return t.record("matmul", std::move(out), {ia, ib}, [ia, ib](const Tape& tp, int self, Gradients& g) {
    const auto go = g.raw(self).mat();
    if (tp.requires_grad(ia)) g.at(ia).mat().noalias() += go * tp.value(ib).mat().transpose();
    if (tp.requires_grad(ib)) g.at(ib).mat().noalias() += tp.value(ia).mat().transpose() * go;
  });
}

Var matmul_nt(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  require_rank2("matmul_nt", av);
  require_rank2("matmul_nt", bv);
  if (av.cols() != bv.cols()) shape_mismatch("matmul_nt", av, bv);
  Tensor out = Tensor::matrix(av.rows(), bv.rows());
  out.mat().noalias() = av.mat() * bv.mat().transpose();
  const int ia = a.id, ib = b.id;
  return t.record("matmul_nt", std::move(out), {ia, ib}, [ia, ib](const Tape& tp, int self, Gradients& g) {
    const auto go = g.raw(self).mat();
    if (tp.requires_grad(ia)) g.at(ia).mat().noalias() += go * tp.value(ib).mat();
    if (tp.requires_grad(ib)) g.at(ib).mat().noalias() += go.transpose() * tp.value(ia).mat();
  });
}

Var add(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("add", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += bv[i];
  const int ia = a.id, ib = b.id;
  return t.record("add", std::move(out), {ia, ib}, [ia, ib](const Tape& tp, int self, Gradients& g) {
    const Tensor& go = g.raw(self);
    for (int in : {ia, ib}) {
      if (!tp.requires_grad(in)) continue;
      Tensor& gi = g.at(in);
      for (std::size_t i = 0; i < gi.size(); ++i) gi[i] += go[i];
    }
  });
}

Var add_row(Var a, Var row) {
  Tape& t = same_tape(a, row);
  const Tensor& av = a.value();
  const Tensor& rv = row.value();
  require_rank2("add_row", av);
  require_rank2("add_row", rv);
  if (rv.rows() != 1 || rv.cols() != av.cols()) shape_mismatch("add_row", av, rv);
  Tensor out = av;
  out.mat().rowwise() += rv.mat().row(0);
  const int ia = a.id, ir = row.id;
  return t.record("add_row", std::move(out), {ia, ir}, [ia, ir](const Tape& tp, int self, Gradients& g) {
    const Tensor& go = g.raw(self);
    if (tp.requires_grad(ia)) g.at(ia).mat() += go.mat();
    if (tp.requires_grad(ir)) g.at(ir).mat() += go.mat().colwise().sum();
  });
}

Var mul(Var a, Var b) {
  Tape& t = same_tape(a, b);
  const Tensor& av = a.value();
  const Tensor& bv = b.value();
  if (av.shape() != bv.shape()) shape_mismatch("mul", av, bv);
  Tensor out = av;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= bv[i];
  const int ia = a.id, ib = b.id;
  return t.record("mul", std::move(out), {ia, ib}, [ia, ib](const Tape& tp, int self, Gradients& g) {
    const Tensor& go = g.raw(self);
    if (tp.requires_grad(ia)) {
      Tensor& ga = g.at(ia);
      const Tensor& bv = tp.value(ib);
      for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * bv[i];
    }
    if (tp.requires_grad(ib)) {
      Tensor& gb = g.at(ib);
      const Tensor& av = tp.value(ia);
      for (std::size_t i = 0; i < gb.size(); ++i) gb[i] += go[i] * av[i];
    }
  });
}

Var scale(Var a, double s) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= s;
  const int ia = a.id;
  return t.record("scale", std::move(out), {ia}, [ia, s](const Tape&, int self, Gradients& g) {
    const Tensor& go = g.raw(self);
    Tensor& ga = g.at(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += s * go[i];
  });
}

Var gather_rows(Var table, std::span<const int> ids) {
  Tape& t = tape_of(table);
  const Tensor& tv = table.value();
  require_rank2("gather_rows", tv);
  const std::size_t d = tv.cols();
  Tensor out = Tensor::matrix(ids.size(), d);
  for (std::size_t r = 0; r < ids.size(); ++r) {
    if (ids[r] < 0 || static_cast<std::size_t>(ids[r]) >= tv.rows()) {
      throw ShapeError("gather_rows: id " + std::to_string(ids[r]) + " out of range for table " +
                       tv.shape_str());
    }
    std::copy_n(&tv(ids[r], 0), d, &out(r, 0));
  }
  const int it = table.id;
  std::vector<int> idx(ids.begin(), ids.end());
  return t.record("gather_rows", std::move(out), {it},
                  [it, idx = std::move(idx), d](const Tape&, int self, Gradients& g) {
                    const Tensor& go = g.raw(self);
                    Tensor& gt = g.at(it);
                    for (std::size_t r = 0; r < idx.size(); ++r) {
                      for (std::size_t c = 0; c < d; ++c) gt(idx[r], c) += go(r, c);
                    }
                  });
}

// ---- nonlinearities ---------------------------------------------------------

Var softmax_rows(Var a) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2("softmax_rows", av);
  Tensor out = av;
  for (std::size_t r = 0; r < out.rows(); ++r) {
    double mx = out(r, 0);
    for (std::size_t c = 1; c < out.cols(); ++c) mx = std::max(mx, out(r, c));
    double z = 0;
    for (std::size_t c = 0; c < out.cols(); ++c) z += (out(r, c) = std::exp(out(r, c) - mx));
    for (std::size_t c = 0; c < out.cols(); ++c) out(r, c) /= z;
  }
  const int ia = a.id;
  return t.record("softmax_rows", std::move(out), {ia}, [ia](const Tape& tp, int self, Gradients& g) {
    const Tensor& y = tp.value(self);
    const Tensor& go = g.raw(self);
    Tensor& ga = g.at(ia);
    for (std::size_t r = 0; r < y.rows(); ++r) {
      double dot = 0;
      for (std::size_t c = 0; c < y.cols(); ++c) dot += go(r, c) * y(r, c);
      for (std::size_t c = 0; c < y.cols(); ++c) ga(r, c) += y(r, c) * (go(r, c) - dot);
    }
  });
}

Var layer_norm(Var a, Var gamma, Var beta, double eps) {
  Tape& t = same_tape(a, gamma);
  same_tape(a, beta);
  const Tensor& av = a.value();
  require_rank2("layer_norm", av);
  const std::size_t m = av.rows(), n = av.cols();
  if (gamma.value().shape() != std::vector<std::size_t>{1, n}) shape_mismatch("layer_norm", av, gamma.value());
  if (beta.value().shape() != std::vector<std::size_t>{1, n}) shape_mismatch("layer_norm", av, beta.value());

  // normalized rows and 1/sigma, saved for backward
  Tensor xhat = Tensor::matrix(m, n);
  std::vector<double> inv_std(m);
  const Tensor& gv = gamma.value();
  const Tensor& bv = beta.value();
  Tensor out = Tensor::matrix(m, n);
  for (std::size_t r = 0; r < m; ++r) {
    double mean = 0;
    for (std::size_t c = 0; c < n; ++c) mean += av(r, c);
    mean /= static_cast<double>(n);
    double var = 0;
    for (std::size_t c = 0; c < n; ++c) var += (av(r, c) - mean) * (av(r, c) - mean);
    var /= static_cast<double>(n);
    inv_std[r] = 1.0 / std::sqrt(var + eps);
    for (std::size_t c = 0; c < n; ++c) {
      xhat(r, c) = (av(r, c) - mean) * inv_std[r];
      out(r, c) = xhat(r, c) * gv[c] + bv[c];
    }
  }
  const int ia = a.id, ig = gamma.id, ib = beta.id;
  return t.record(
      "layer_norm", std::move(out), {ia, ig, ib},
      [ia, ig, ib, xhat = std::move(xhat), inv_std = std::move(inv_std)](const Tape& tp, int self,
                                                                           Gradients& g) {
        const Tensor& go = g.raw(self);
        const Tensor& gv = tp.value(ig);
        const std::size_t m = xhat.rows(), n = xhat.cols();
        if (tp.requires_grad(ig)) {
          Tensor& gg = g.at(ig);
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) gg[c] += go(r, c) * xhat(r, c);
        }
        if (tp.requires_grad(ib)) {
          Tensor& gb = g.at(ib);
          for (std::size_t r = 0; r < m; ++r)
            for (std::size_t c = 0; c < n; ++c) gb[c] += go(r, c);
        }
        if (tp.requires_grad(ia)) {
          Tensor& ga = g.at(ia);
          std::vector<double> dxhat(n);
          for (std::size_t r = 0; r < m; ++r) {
            double mean_d = 0, mean_dx = 0;
            for (std::size_t c = 0; c < n; ++c) {
              dxhat[c] = go(r, c) * gv[c];
              mean_d += dxhat[c];
              mean_dx += dxhat[c] * xhat(r, c);
            }
            mean_d /= static_cast<double>(n);
            mean_dx /= static_cast<double>(n);
            for (std::size_t c = 0; c < n; ++c) {
              ga(r, c) += inv_std[r] * (dxhat[c] - mean_d - xhat(r, c) * mean_dx);
            }
          }
        }
      });
}

Var gelu(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    out[i] = 0.5 * x * (1.0 + std::tanh(kGeluC * (x + kGeluA * x * x * x)));
  }
  const int ia = a.id;
  return t.record("gelu", std::move(out), {ia}, [ia](const Tape& tp, int self, Gradients& g) {
    const Tensor& x = tp.value(ia);
    const Tensor& go = g.raw(self);
    Tensor& ga = g.at(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) {
      const double v = x[i];
      const double th = std::tanh(kGeluC * (v + kGeluA * v * v * v));
      const double du = kGeluC * (1.0 + 3.0 * kGeluA * v * v);
      ga[i] += go[i] * (0.5 * (1.0 + th) + 0.5 * v * (1.0 - th * th) * du);
    }
  });
}

Var sigmoid(Var a) {
  Tape& t = tape_of(a);
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) {
    const double x = out[i];
    out[i] = x >= 0 ? 1.0 / (1.0 + std::exp(-x)) : std::exp(x) / (1.0 + std::exp(x));
  }
  const int ia = a.id;
  return t.record("sigmoid", std::move(out), {ia}, [ia](const Tape& tp, int self, Gradients& g) {
    const Tensor& y = tp.value(self);
    const Tensor& go = g.raw(self);
    Tensor& ga = g.at(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * y[i] * (1.0 - y[i]);
  });
}

Var dropout(Var a, double rate, bool training, Rng& rng) {
  if (!training || rate <= 0.0) return a;
  if (rate >= 1.0) throw ContractError("dropout: rate must be < 1");
  Tape& t = tape_of(a);
  const double keep = 1.0 / (1.0 - rate);
  std::vector<double> mask(a.value().size());
  for (double& m : mask) m = rng.uniform() < rate ? 0.0 : keep;
  Tensor out = a.value();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] *= mask[i];
  const int ia = a.id;
  return t.record("dropout", std::move(out), {ia},
                  [ia, mask = std::move(mask)](const Tape&, int self, Gradients& g) {
                    const Tensor& go = g.raw(self);
                    Tensor& ga = g.at(ia);
                    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i] * mask[i];
                  });
}

// ---- structural ---------------------------------------------------------------

Var concat_rows(std::span<const Var> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no inputs");
  Tape& t = tape_of(parts[0]);
  const std::size_t cols = parts[0].value().cols();
  std::size_t rows = 0;
  std::vector<int> ids;
  for (const Var& p : parts) {
    if (&tape_of(p) != &t) throw ContractError("concat_rows: variables belong to different tapes");
    require_rank2("concat_rows", p.value());
    if (p.value().cols() != cols) shape_mismatch("concat_rows", parts[0].value(), p.value());
    rows += p.value().rows();
    ids.push_back(p.id);
  }
  Tensor out = Tensor::matrix(rows, cols);
  std::size_t off = 0;
  for (const Var& p : parts) {
    std::copy(p.value().data().begin(), p.value().data().end(), out.data().begin() + off);
    off += p.value().size();
  }
  std::vector<int> inputs = ids;
  return t.record("concat_rows", std::move(out), std::move(inputs),
                  [ids](const Tape& tp, int self, Gradients& g) {
                    const Tensor& go = g.raw(self);
                    std::size_t off = 0;
                    for (int in : ids) {
                      const std::size_t sz = tp.value(in).size();
                      if (tp.requires_grad(in)) {
                        Tensor& gi = g.at(in);
                        for (std::size_t i = 0; i < sz; ++i) gi[i] += go[off + i];
                      }
                      off += sz;
                    }
                  });
}

Var slice_rows(Var a, std::size_t begin, std::size_t count) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2("slice_rows", av);
  if (begin + count > av.rows()) {
    throw ShapeError("slice_rows: rows [" + std::to_string(begin) + ", " + std::to_string(begin + count) +
                     ") out of range for " + av.shape_str());
  }
  const std::size_t cols = av.cols();
  Tensor out = Tensor::matrix(count, cols);
  std::copy_n(av.data().begin() + begin * cols, count * cols, out.data().begin());
  const int ia = a.id;
  return t.record("slice_rows", std::move(out), {ia}, [ia, begin, cols](const Tape&, int self, Gradients& g) {
    const Tensor& go = g.raw(self);
    Tensor& ga = g.at(ia);
    for (std::size_t i = 0; i < go.size(); ++i) ga[begin * cols + i] += go[i];
  });
}

Var reshape(Var a, std::size_t rows, std::size_t cols) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  if (rows * cols != av.size()) {
    throw ShapeError("reshape: cannot view " + av.shape_str() + " as " + shape_str({rows, cols}));
  }
  Tensor out({rows, cols}, av.values());
  const int ia = a.id;
  return t.record("reshape", std::move(out), {ia}, [ia](const Tape&, int self, Gradients& g) {
    const Tensor& go = g.raw(self);
    Tensor& ga = g.at(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go[i];
  });
}

Var element(Var a, std::size_t r, std::size_t c) {
  Tape& t = tape_of(a);
  const Tensor& av = a.value();
  require_rank2("element", av);
  if (r >= av.rows() || c >= av.cols()) {
    throw ShapeError("element: (" + std::to_string(r) + ", " + std::to_string(c) + ") out of range for " +
                     av.shape_str());
  }
  const int ia = a.id;
  return t.record("element", Tensor::scalar(av(r, c)), {ia}, [ia, r, c](const Tape&, int self, Gradients& g) {
    g.at(ia)(r, c) += g.raw(self)[0];
  });
}

Var reduce_sum(Var a) {
  Tape& t = tape_of(a);
  double s = 0;
  for (double v : a.value().data()) s += v;
  const int ia = a.id;
  return t.record("reduce_sum", Tensor::scalar(s), {ia}, [ia](const Tape&, int self, Gradients& g) {
    const double go = g.raw(self)[0];
    Tensor& ga = g.at(ia);
    for (std::size_t i = 0; i < ga.size(); ++i) ga[i] += go;
  });
}

// ---- attention ----------------------------------------------------------------

Var segment_attention(Var q, Var k, Var v, std::span<const std::size_t> offsets, std::size_t heads) {
  Tape& t = same_tape(q, k);
  same_tape(q, v);
  const Tensor& qv = q.value();
  const Tensor& kv = k.value();
  const Tensor& vv = v.value();
  require_rank2("segment_attention", qv);
  if (kv.shape() != qv.shape()) shape_mismatch("segment_attention", qv, kv);
  if (vv.shape() != qv.shape()) shape_mismatch("segment_attention", qv, vv);
  const std::size_t rows = qv.rows(), d = qv.cols();
  if (heads == 0 || d % heads != 0) {
    throw ShapeError("segment_attention: width " + std::to_string(d) + " not divisible by " +
                     std::to_string(heads) + " heads");
  }
  if (offsets.size() < 2 || offsets.front() != 0 || offsets.back() != rows) {
    throw ShapeError("segment_attention: segment offsets must cover rows [0, " + std::to_string(rows) + ")");
  }
  const std::size_t dh = d / heads;
  const double sc = 1.0 / std::sqrt(static_cast<double>(dh));
  const std::size_t n_seg = offsets.size() - 1;

  // attention probabilities per (segment, head), kept for backward
  std::vector<RowMatrix> probs(n_seg * heads);
  Tensor out = Tensor::matrix(rows, d);
  const auto Q = qv.mat();
  const auto K = kv.mat();
  const auto V = vv.mat();
  auto O = out.mat();
  for (std::size_t s = 0; s < n_seg; ++s) {
    if (offsets[s + 1] < offsets[s]) throw ShapeError("segment_attention: offsets must be non-decreasing");
    const std::size_t b = offsets[s], len = offsets[s + 1] - offsets[s];
    for (std::size_t h = 0; h < heads; ++h) {
      RowMatrix S = sc * (Q.block(b, h * dh, len, dh) * K.block(b, h * dh, len, dh).transpose());
      for (Eigen::Index r = 0; r < S.rows(); ++r) {
        const double mx = S.row(r).maxCoeff();
        S.row(r) = (S.row(r).array() - mx).exp();
        S.row(r) /= S.row(r).sum();
      }
      O.block(b, h * dh, len, dh).noalias() = S * V.block(b, h * dh, len, dh);
      probs[s * heads + h] = std::move(S);
    }
  }
  std::vector<std::size_t> offs(offsets.begin(), offsets.end());
  const int iq = q.id, ik = k.id, iv = v.id;
  return t.record(
      "segment_attention", std::move(out), {iq, ik, iv},
      [iq, ik, iv, heads, dh, sc, offs = std::move(offs), probs = std::move(probs)](const Tape& tp, int self,
                                                                                      Gradients& g) {
        const auto dO = g.raw(self).mat();
        const auto Q = tp.value(iq).mat();
        const auto K = tp.value(ik).mat();
        const auto V = tp.value(iv).mat();
        const bool gq = tp.requires_grad(iq), gk = tp.requires_grad(ik), gv = tp.requires_grad(iv);
        Tensor* dQ = gq ? &g.at(iq) : nullptr;
        Tensor* dK = gk ? &g.at(ik) : nullptr;
        Tensor* dV = gv ? &g.at(iv) : nullptr;
        for (std::size_t s = 0; s + 1 < offs.size(); ++s) {
          const std::size_t b = offs[s], len = offs[s + 1] - offs[s];
          for (std::size_t h = 0; h < heads; ++h) {
            const RowMatrix& P = probs[s * heads + h];
            const auto dOb = dO.block(b, h * dh, len, dh);
            if (dV) dV->mat().block(b, h * dh, len, dh).noalias() += P.transpose() * dOb;
            if (!dQ && !dK) continue;
            RowMatrix dP = dOb * V.block(b, h * dh, len, dh).transpose();
            const Eigen::VectorXd rowdot = (dP.array() * P.array()).rowwise().sum();
            RowMatrix dS = P.array() * (dP.colwise() - rowdot).array();
            dS *= sc;
            if (dQ) dQ->mat().block(b, h * dh, len, dh).noalias() += dS * K.block(b, h * dh, len, dh);
            if (dK) dK->mat().block(b, h * dh, len, dh).noalias() += dS.transpose() * Q.block(b, h * dh, len, dh);
          }
        }
      });
}

// ---- loss -----------------------------------------------------------------------

Var bce(Var probs, const Tensor& targets) {
  Tape& t = tape_of(probs);
  const Tensor& pv = probs.value();
  require_rank2("bce", pv);
  if (targets.shape() != pv.shape()) shape_mismatch("bce", pv, targets);
  for (double y : targets.data()) {
    if (y != 0.0 && y != 1.0) throw ContractError("bce: targets must be 0 or 1, got " + std::to_string(y));
  }
  const double inv_rows = 1.0 / static_cast<double>(pv.rows());
  double loss = 0;
  for (std::size_t i = 0; i < pv.size(); ++i) {
    const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
    loss -= targets[i] * std::log(p) + (1.0 - targets[i]) * std::log(1.0 - p);
  }
  loss *= inv_rows;
  const int ip = probs.id;
  return t.record("bce", Tensor::scalar(loss), {ip}, [ip, targets, inv_rows](const Tape& tp, int self, Gradients& g) {
    const double go = g.raw(self)[0];
    const Tensor& pv = tp.value(ip);
    Tensor& gp = g.at(ip);
    for (std::size_t i = 0; i < gp.size(); ++i) {
      const double p = std::clamp(pv[i], kProbClamp, 1.0 - kProbClamp);
      gp[i] += go * inv_rows * (-targets[i] / p + (1.0 - targets[i]) / (1.0 - p));
    }
  });
}

}  // namespace drc::ad
