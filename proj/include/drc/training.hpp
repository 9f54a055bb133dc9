#pragma once

#include <functional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drc/model.hpp"

namespace drc {

struct Hyperparams {
  double lr = 3e-4;
  std::size_t batch_size = 8;
  std::size_t epochs = 10;
  double dropout_rate = 0.1;
  double q = 0.2;
  std::size_t r = 0;  // 0 selects round(2n/3), capped by the largest ground-truth set
  double alpha = 0.5;
  double threshold = 0.5;
  std::uint64_t seed = 1;
  bool edm_enabled = true;
  bool compat_sampler = false;
  std::size_t min_word_freq = 1;

  void validate() const;
  nlohmann::json to_json() const;
};

// r actually used for `train` under `hp`; throws ConfigError when infeasible.
std::size_t resolve_r(const Hyperparams& hp, const Dataset& train);

struct InstanceRecord {
  std::size_t id = 0;
  double loss = 0.0;
  bool gt_is_major = false;
  bool edm_activated = false;
};

struct StepRecord {
  std::size_t epoch = 0;
  std::size_t step = 0;  // global optimizer step
  double loss = 0.0;     // mean over the batch
  std::vector<InstanceRecord> instances;
};

struct TrainLog {
  std::vector<StepRecord> steps;
  std::vector<double> dev_f1;  // per epoch

  std::string to_jsonl() const;
  // Step records only; dev_f1 is not part of the log file.
  static TrainLog from_jsonl(const std::string& text);
};

struct TrainResult {
  Model model;  // best dev micro-F1 checkpoint
  TrainLog log;
  double best_dev_f1 = 0.0;
  std::size_t best_epoch = 0;
};

struct AdamState {
  std::vector<Tensor> m;
  std::vector<Tensor> v;
  std::size_t step = 0;
};

AdamState make_adam_state(const ParamStore& params);

void adam_step(ParamStore& params, std::span<const Tensor> grads, AdamState& state, double lr, double beta1 = 0.9,
               double beta2 = 0.999, double eps = 1e-8);

using EpochCallback = std::function<void(std::size_t epoch, double mean_loss, double dev_f1)>;

TrainResult train(const Dataset& train_data, const Dataset& dev, const Hyperparams& hp, const EncoderConfig& enc,
                  const HeadConfig& head = {}, const EpochCallback& on_epoch = {});

// Multi-hot target over the slots of `order`.
std::vector<double> make_targets(const std::vector<std::string>& gt, const EventOrder& order);

struct LossSeries {
  std::vector<std::size_t> steps;
  std::vector<double> values;
};

struct LossCurves {
  LossSeries major;
  LossSeries minor;

  nlohmann::json to_json() const;
  std::string to_svg(const std::string& title) const;
};

// Per step, the mean loss of the major-flagged (resp. minor) instances, then a
// trailing moving average over `window` points (clamped to the series length).
LossCurves split_loss_curves(const TrainLog& log, std::size_t window);

// Mean per-instance loss for major (resp. minor) instances over epochs [first, last].
double mean_instance_loss(const TrainLog& log, bool major, std::size_t first_epoch, std::size_t last_epoch);

}  // namespace drc
