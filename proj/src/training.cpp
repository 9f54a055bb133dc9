#include "drc/training.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>

#include "drc/error.hpp"
#include "drc/evaluation.hpp"
#include "drc/svg.hpp"

namespace drc {

// ---- hyperparameters ---------------------------------------------------------------

void Hyperparams::validate() const {
  if (!(lr > 0.0)) throw ConfigError("train.lr must be > 0");
  if (batch_size == 0) throw ConfigError("train.batch_size must be >= 1");
  if (epochs == 0) throw ConfigError("train.epochs must be >= 1");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("train.dropout must lie in [0, 1)");
  if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("edm.q must lie in [0, 1]");
  if (!(alpha > 0.0 && alpha < 1.0)) throw ConfigError("train.alpha must lie in (0, 1)");
  if (!(threshold > 0.0 && threshold < 1.0)) throw ConfigError("train.threshold must lie in (0, 1)");
  if (min_word_freq == 0) throw ConfigError("encoder.min_word_freq must be >= 1");
}

nlohmann::json Hyperparams::to_json() const {
  return {{"lr", lr},         {"batch_size", batch_size},     {"epochs", epochs},
          {"dropout", dropout_rate}, {"q", q},                {"r", r},
          {"alpha", alpha},   {"threshold", threshold},       {"seed", seed},
          {"edm_enabled", edm_enabled}, {"compat_sampler", compat_sampler}, {"min_word_freq", min_word_freq}};
}

std::size_t resolve_r(const Hyperparams& hp, const Dataset& train) {
  const std::size_t n = train.num_types();
  std::size_t max_gt = 1;
  for (const Sentence& s : train.sentences()) max_gt = std::max(max_gt, s.labels.size());
  const std::size_t cap = n > max_gt ? n - max_gt : 0;
  if (hp.r == 0) {
    const auto auto_r = static_cast<std::size_t>(std::lround(2.0 * static_cast<double>(n) / 3.0));
    return std::max<std::size_t>(std::min(auto_r, cap), std::min<std::size_t>(cap, 1));
  }
  if (hp.r > cap) {
    throw ConfigError("edm.r=" + std::to_string(hp.r) + " exceeds n - max|E_GT| = " + std::to_string(cap));
  }
  return hp.r;
}

// ---- Adam --------------------------------------------------------------------------------

AdamState make_adam_state(const ParamStore& params) {
  AdamState s;
  for (std::size_t i = 0; i < params.size(); ++i) {
    s.m.emplace_back(params[i].shape(), 0.0);
    s.v.emplace_back(params[i].shape(), 0.0);
  }
  return s;
}

void adam_step(ParamStore& params, std::span<const Tensor> grads, AdamState& state, double lr, double beta1,
               double beta2, double eps) {
  if (grads.size() != params.size() || state.m.size() != params.size()) {
    throw ContractError("adam_step: parameter, gradient and state counts differ");
  }
  ++state.step;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    Tensor& p = params[i];
    const Tensor& g = grads[i];
    if (g.shape() != p.shape()) {
      throw ContractError("adam_step: gradient " + g.shape_str() + " does not match parameter '" + params.name(i) +
                          "' " + p.shape_str());
    }
    Tensor& m = state.m[i];
    Tensor& v = state.v[i];
    for (std::size_t k = 0; k < p.size(); ++k) {
      m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
      v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
      p[k] -= lr * (m[k] / c1) / (std::sqrt(v[k] / c2) + eps);
    }
  }
}

// ---- training loop --------------------------------------------------------------------------

std::vector<double> make_targets(const std::vector<std::string>& gt, const EventOrder& order) {
  std::vector<double> t(order.size(), 0.0);
  for (std::size_t j = 0; j < order.size(); ++j) {
    if (std::find(gt.begin(), gt.end(), order.sequence[j]) != gt.end()) t[j] = 1.0;
  }
  return t;
}

namespace {

std::string describe_batch(const Dataset& d, std::span<const std::size_t> ids) {
  std::ostringstream os;
  for (std::size_t id : ids) {
    os << "\n  #" << id << " [";
    for (const std::string& w : d.sentences()[id].tokens) os << ' ' << w;
    os << " ] ->";
    for (const std::string& l : d.sentences()[id].labels) os << ' ' << l;
  }
  return os.str();
}

}  // namespace

TrainResult train(const Dataset& train_data, const Dataset& dev, const Hyperparams& hp, const EncoderConfig& enc_cfg,
                  const HeadConfig& head, const EpochCallback& on_epoch) {
  hp.validate();
  if (train_data.size() == 0) throw ConfigError("training set is empty");
  if (dev.size() && dev.inventory() != train_data.inventory()) {
    throw ConfigError("train and dev inventories differ");
  }
  EncoderConfig enc = enc_cfg;
  enc.dropout_rate = hp.dropout_rate;
  const std::size_t r = hp.edm_enabled ? resolve_r(hp, train_data) : 0;
  const EdmConfig edm{hp.q, r, hp.compat_sampler};

  TrainResult res{create_model(train_data, enc, head, hp.alpha, hp.threshold, hp.min_word_freq, hp.seed), {}, -1.0, 0};
  Model& m = res.model;
  const std::size_t n_train = train_data.size();

  // per-instance data that does not change across epochs
  std::vector<EncodedInput> init_inputs;
  std::vector<std::vector<double>> init_targets;
  std::vector<bool> gt_major;
  for (const Sentence& s : train_data.sentences()) {
    init_inputs.push_back(build_input(s, m.s_init, m.vocab, m.encoder));
    init_targets.push_back(make_targets(s.labels, m.s_init));
    bool major = false;
    for (const std::string& l : s.labels) major = major || m.is_major(l);
    gt_major.push_back(major);
  }

  AdamState adam = make_adam_state(m.params);
  Rng edm_rng(derive_seed(hp.seed, 3));
  Rng dropout_rng(derive_seed(hp.seed, 4));
  ParamStore best = m.params;
  std::size_t step = 0;
  const std::size_t n_slots = m.s_init.size();

  for (std::size_t epoch = 0; epoch < hp.epochs; ++epoch) {
    std::vector<std::size_t> order(n_train);
    std::iota(order.begin(), order.end(), 0);
    Rng shuffle_rng(derive_seed(hp.seed, 1000 + epoch));
    shuffle_rng.shuffle(order);
    double epoch_loss = 0;

    for (std::size_t b = 0; b < n_train; b += hp.batch_size) {
      const std::span<const std::size_t> ids(order.data() + b, std::min(hp.batch_size, n_train - b));
      std::vector<EncodedInput> inputs;
      Tensor targets = Tensor::matrix(ids.size(), n_slots);
      StepRecord rec{epoch, step, 0.0, {}};
      for (std::size_t i = 0; i < ids.size(); ++i) {
        const std::size_t id = ids[i];
        const Sentence& s = train_data.sentences()[id];
        bool activated = false;
        if (hp.edm_enabled) {
          const DerangementContext ctx{s.labels, &m.partition, &m.s_sa, &m.s_init};
          DerangeResult dr = maybe_derange(ctx, edm, edm_rng);
          activated = dr.activated;
          if (activated) {
            inputs.push_back(build_input(s, dr.order, m.vocab, m.encoder));
            if (make_targets(s.labels, dr.order) != init_targets[id]) {
              throw ContractError("derangement moved a ground-truth event of instance " + std::to_string(id));
            }
          }
        }
        if (!activated) inputs.push_back(init_inputs[id]);
        std::copy(init_targets[id].begin(), init_targets[id].end(), targets.data().begin() + i * n_slots);
        rec.instances.push_back({id, 0.0, gt_major[id], activated});
      }

      ad::Tape tape;
      const ParamVars p = bind_params(tape, m.params, true);
      ad::Var loss;
      try {
        const BatchEncoding benc = encode_batch(p, m.encoder, inputs, true, dropout_rng);
        const ad::Var probs = head_forward(p, m.head, benc, inputs);
        loss = ad::bce(probs, targets);
        const Tensor& pv = probs.value();
        for (std::size_t i = 0; i < ids.size(); ++i) {
          rec.instances[i].loss = bce_loss(pv.data().subspan(i * n_slots, n_slots),
                                           targets.data().subspan(i * n_slots, n_slots));
        }
      } catch (const NumericError& e) {
        throw NumericError(std::string("non-finite forward pass at epoch ") + std::to_string(epoch) + ", step " +
                           std::to_string(step) + ": " + e.what() + describe_batch(train_data, ids));
      }
      rec.loss = loss.value().item();
      if (!std::isfinite(rec.loss)) {
        throw NumericError("non-finite loss at step " + std::to_string(step) + describe_batch(train_data, ids));
      }
      const ad::Gradients grads = tape.backward(loss);
      std::vector<Tensor> g;
      g.reserve(p.vars.size());
      for (const ad::Var& v : p.vars) g.push_back(grads.of(v));
      adam_step(m.params, g, adam, hp.lr);

      epoch_loss += rec.loss * static_cast<double>(ids.size());
      res.log.steps.push_back(std::move(rec));
      ++step;
    }

    double dev_f1 = 0.0;
    if (dev.size()) {
      dev_f1 = evaluate(m, dev, m.s_init).micro.f1;
    }
    res.log.dev_f1.push_back(dev_f1);
    // without a dev set the last epoch wins
    if (dev_f1 > res.best_dev_f1 || !dev.size()) {
      res.best_dev_f1 = dev_f1;
      res.best_epoch = epoch;
      best = m.params;
    }
    if (on_epoch) on_epoch(epoch, epoch_loss / static_cast<double>(n_train), dev_f1);
  }
  m.params = std::move(best);
  return res;
}

std::string TrainLog::to_jsonl() const {
  std::string out;
  for (const StepRecord& s : steps) {
    nlohmann::json j;
    j["epoch"] = s.epoch;
    j["step"] = s.step;
    j["loss"] = s.loss;
    j["instances"] = nlohmann::json::array();
    for (const InstanceRecord& r : s.instances) {
      j["instances"].push_back(
          {{"id", r.id}, {"loss", r.loss}, {"gt_is_major", r.gt_is_major}, {"edm_activated", r.edm_activated}});
    }
    out += j.dump() + "\n";
  }
  return out;
}

TrainLog TrainLog::from_jsonl(const std::string& text) {
  TrainLog log;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      const nlohmann::json j = nlohmann::json::parse(line);
      StepRecord s{j.at("epoch").get<std::size_t>(), j.at("step").get<std::size_t>(), j.at("loss").get<double>(), {}};
      for (const auto& r : j.at("instances")) {
        s.instances.push_back({r.at("id").get<std::size_t>(), r.at("loss").get<double>(),
                               r.at("gt_is_major").get<bool>(), r.at("edm_activated").get<bool>()});
      }
      log.steps.push_back(std::move(s));
    } catch (const nlohmann::json::exception& e) {
      throw ParseError("training log line " + std::to_string(lineno) + ": " + e.what());
    }
  }
  return log;
}

// ---- loss curves ---------------------------------------------------------------------------

LossCurves split_loss_curves(const TrainLog& log, std::size_t window) {
  if (log.steps.empty()) throw DomainError("split_loss_curves: empty training log");
  LossCurves c;
  for (const StepRecord& s : log.steps) {
    double sum[2] = {0, 0};
    std::size_t cnt[2] = {0, 0};
    for (const InstanceRecord& r : s.instances) {
      sum[r.gt_is_major] += r.loss;
      ++cnt[r.gt_is_major];
    }
    if (cnt[1]) {
      c.major.steps.push_back(s.step);
      c.major.values.push_back(sum[1] / static_cast<double>(cnt[1]));
    }
    if (cnt[0]) {
      c.minor.steps.push_back(s.step);
      c.minor.values.push_back(sum[0] / static_cast<double>(cnt[0]));
    }
  }
  auto smooth = [window](LossSeries& s) {
    const std::size_t w = std::clamp<std::size_t>(window, 1, std::max<std::size_t>(s.values.size(), 1));
    std::vector<double> out(s.values.size());
    double acc = 0;
    for (std::size_t i = 0; i < s.values.size(); ++i) {
      acc += s.values[i];
      if (i >= w) acc -= s.values[i - w];
      out[i] = acc / static_cast<double>(std::min(i + 1, w));
    }
    s.values = std::move(out);
  };
  smooth(c.major);
  smooth(c.minor);
  return c;
}

nlohmann::json LossCurves::to_json() const {
  return {{"major", {{"step", major.steps}, {"loss", major.values}}},
          {"minor", {{"step", minor.steps}, {"loss", minor.values}}}};
}

std::string LossCurves::to_svg(const std::string& title) const {
  std::vector<svg::Series> series;
  series.push_back({"major", major.steps, major.values, "#d62728"});
  series.push_back({"minor", minor.steps, minor.values, "#1f77b4"});
  return svg::line_chart(title, "step", "loss", series);
}

double mean_instance_loss(const TrainLog& log, bool major, std::size_t first_epoch, std::size_t last_epoch) {
  double sum = 0;
  std::size_t n = 0;
  for (const StepRecord& s : log.steps) {
    if (s.epoch < first_epoch || s.epoch > last_epoch) continue;
    for (const InstanceRecord& r : s.instances) {
      if (r.gt_is_major != major) continue;
      sum += r.loss;
      ++n;
    }
  }
  return n ? sum / static_cast<double>(n) : 0.0;
}

}  // namespace drc
