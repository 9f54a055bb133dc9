#include "drc/classifier.hpp"

#include <algorithm>
#include <cmath>

#include "drc/error.hpp"

namespace drc {

using ad::Var;

nlohmann::json HeadConfig::to_json() const {
  return {{"n_events", n_events}, {"hidden", hidden}, {"cls_input", cls_input}};
}

HeadConfig HeadConfig::from_json(const nlohmann::json& j) {
  HeadConfig c;
  c.n_events = j.at("n_events");
  c.hidden = j.at("hidden");
  c.cls_input = j.at("cls_input");
  return c;
}

void init_head_params(ParamStore& params, const HeadConfig& cfg, std::size_t d_model, Rng& rng) {
  const std::size_t in = cfg.input_width(d_model), hid = cfg.hidden_width(d_model);
  auto normal = [&](std::size_t r, std::size_t c, double std) {
    Tensor t = Tensor::matrix(r, c);
    for (double& v : t.data()) v = std * rng.normal();
    return t;
  };
  params.add("head.w1", normal(in, hid, 1.0 / std::sqrt(static_cast<double>(in))));
  params.add("head.b1", Tensor::matrix(1, hid, 0.0));
  params.add("head.w2", normal(hid, cfg.n_events, 1.0 / std::sqrt(static_cast<double>(hid))));
  params.add("head.b2", Tensor::matrix(1, cfg.n_events, 0.0));
}

namespace {

Var mlp(const ParamVars& p, Var x) {
  const Var h = ad::gelu(ad::add_row(ad::matmul(x, p("head.w1")), p("head.b1")));
  return ad::sigmoid(ad::add_row(ad::matmul(h, p("head.w2")), p("head.b2")));
}

void check_width(const ParamVars& p, const HeadConfig& cfg, std::size_t d_model) {
  const Tensor& w1 = p("head.w1").value();
  const Tensor& w2 = p("head.w2").value();
  if (w1.rows() != cfg.input_width(d_model) || w2.cols() != cfg.n_events) {
    throw ConfigError("head: parameters " + w1.shape_str() + "/" + w2.shape_str() + " do not match " +
                      std::to_string(cfg.n_events) + " event slots of width " + std::to_string(d_model));
  }
}

}  // namespace

Var head_forward(const ParamVars& p, const HeadConfig& cfg, const BatchEncoding& enc,
                 std::span<const EncodedInput> inputs) {
  const std::size_t d = enc.hidden.value().cols();
  check_width(p, cfg, d);
  std::vector<Var> rows;
  rows.reserve(inputs.size());
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    const std::size_t off = enc.offsets[i];
    if (cfg.cls_input) {
      rows.push_back(ad::slice_rows(enc.hidden, off, 1));
      continue;
    }
    if (inputs[i].n_events != cfg.n_events) {
      throw ConfigError("head expects " + std::to_string(cfg.n_events) + " event slots, input has " +
                        std::to_string(inputs[i].n_events));
    }
    const Var events = ad::slice_rows(enc.hidden, off + inputs[i].first_event_row(), cfg.n_events);
    rows.push_back(ad::reshape(events, 1, cfg.n_events * d));
  }
  return mlp(p, ad::concat_rows(rows));
}

std::vector<double> predict_probs(const HiddenStates& h, const ParamStore& params, const HeadConfig& cfg) {
  const std::size_t d = h.events.cols();
  if (!cfg.cls_input && h.events.rows() != cfg.n_events) {
    throw ConfigError("head expects " + std::to_string(cfg.n_events) + " event slots, hidden states have " +
                      std::to_string(h.events.rows()));
  }
  ad::Tape tape;
  const ParamVars p = bind_params(tape, params, false);
  check_width(p, cfg, d);
  const Var x = cfg.cls_input ? tape.constant(h.cls) : tape.constant(Tensor({1, cfg.n_events * d}, h.events.values()));
  const Var probs = mlp(p, x);
  return probs.value().values();
}

std::vector<std::size_t> decide_labels(std::span<const double> probs, double threshold, std::size_t negative_slot) {
  std::vector<std::size_t> out;
  bool other = false;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    if (probs[j] >= threshold) {
      out.push_back(j);
      other = other || j != negative_slot;
    }
  }
  if (other) {
    std::erase(out, negative_slot);
    return out;
  }
  if (!out.empty()) return out;
  std::size_t best = 0;
  for (std::size_t j = 1; j < probs.size(); ++j) {
    if (probs[j] > probs[best]) best = j;
  }
  if (!probs.empty()) out.push_back(best);
  return out;
}

double bce_loss(std::span<const double> probs, std::span<const double> targets) {
  if (probs.size() != targets.size()) {
    throw ContractError("bce_loss: " + std::to_string(probs.size()) + " probabilities vs " +
                        std::to_string(targets.size()) + " targets");
  }
  double loss = 0;
  for (std::size_t j = 0; j < probs.size(); ++j) {
    const double y = targets[j];
    if (y != 0.0 && y != 1.0) throw ContractError("bce_loss: targets must be 0 or 1");
    const double p = std::clamp(probs[j], ad::kProbClamp, 1.0 - ad::kProbClamp);
    loss -= y * std::log(p) + (1.0 - y) * std::log(1.0 - p);
  }
  return loss;
}

void permute_head_slots(ParamStore& params, const HeadConfig& cfg, std::size_t d_model,
                        std::span<const std::size_t> perm) {
  if (perm.size() != cfg.n_events) throw ContractError("permute_head_slots: permutation size mismatch");
  Tensor& w2 = params.at("head.w2");
  Tensor& b2 = params.at("head.b2");
  const Tensor w2_old = w2, b2_old = b2;
  for (std::size_t r = 0; r < w2.rows(); ++r) {
    for (std::size_t j = 0; j < perm.size(); ++j) w2(r, j) = w2_old(r, perm[j]);
  }
  for (std::size_t j = 0; j < perm.size(); ++j) b2(0, j) = b2_old(0, perm[j]);
  if (cfg.cls_input) return;
  Tensor& w1 = params.at("head.w1");
  const Tensor w1_old = w1;
  const std::size_t cols = w1.cols();
  for (std::size_t j = 0; j < perm.size(); ++j) {
    std::copy_n(w1_old.data().begin() + perm[j] * d_model * cols, d_model * cols,
                w1.data().begin() + j * d_model * cols);
  }
}

}  // namespace drc
