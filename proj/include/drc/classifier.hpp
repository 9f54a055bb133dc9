#pragma once

#include <span>
#include <vector>

#include <json.hpp>

#include "drc/autodiff.hpp"
#include "drc/encoder.hpp"
#include "drc/param_store.hpp"

namespace drc {

// Two-layer MLP head: (n * d_model -> hidden) GELU (hidden -> n), sigmoid.
// With cls_input the first layer reads h_[CLS] (d_model wide) instead of the
// concatenated event-token states.
struct HeadConfig {
  std::size_t n_events = 0;
  std::size_t hidden = 0;  // 0 selects 12 * d_model
  bool cls_input = false;

  std::size_t hidden_width(std::size_t d_model) const { return hidden ? hidden : 12 * d_model; }
  std::size_t input_width(std::size_t d_model) const { return cls_input ? d_model : n_events * d_model; }
  nlohmann::json to_json() const;
  static HeadConfig from_json(const nlohmann::json& j);
};

void init_head_params(ParamStore& params, const HeadConfig& cfg, std::size_t d_model, Rng& rng);

// Head over an encoded batch; returns [batch, n] probabilities. Slot j of each
// row belongs to the event at position j of that input's order.
ad::Var head_forward(const ParamVars& p, const HeadConfig& cfg, const BatchEncoding& enc,
                     std::span<const EncodedInput> inputs);

// Probabilities from precomputed hidden states.
std::vector<double> predict_probs(const HiddenStates& h, const ParamStore& params, const HeadConfig& cfg);

// Slot indices whose probability passes `threshold`. The negative slot is
// dropped when any other slot passes; when nothing passes the argmax slot is
// returned (lowest index on ties).
std::vector<std::size_t> decide_labels(std::span<const double> probs, double threshold, std::size_t negative_slot);

// -sum_j [y_j log p_j + (1 - y_j) log(1 - p_j)] with p clamped to [1e-12, 1 - 1e-12].
double bce_loss(std::span<const double> probs, std::span<const double> targets);

// Rewires the head so that an input whose event slots were permuted by `perm`
// (new slot j holds old slot perm[j]) yields probabilities permuted the same way.
void permute_head_slots(ParamStore& params, const HeadConfig& cfg, std::size_t d_model,
                        std::span<const std::size_t> perm);

}  // namespace drc
