#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "drc/model.hpp"

namespace drc {

// Gradient saliency of one event's predicted probability with respect to the
// token embeddings of the context words.
struct SaliencyResult {
  std::vector<std::string> tokens;
  std::string target;
  std::vector<double> scores;      // gradient x input, signed
  std::vector<double> grad_norms;  // L2 norm of the raw gradient
  double prob = 0.0;               // predicted probability of target

  std::size_t argmax() const;
  nlohmann::json to_json() const;
};

SaliencyResult saliency(const Model& m, const Sentence& x, const std::string& target, const EventOrder& order);

// One row per result, tokens colored by score / max|score| (red positive, blue
// negative). All-zero rows render neutral.
std::string render_heatmap_svg(const std::vector<SaliencyResult>& results);
// Plain-text rendering: "token:score" columns with a bar per token.
std::string render_heatmap_text(const std::vector<SaliencyResult>& results);

// score / max|score| per token; zeros when every score is zero.
std::vector<double> normalized_scores(const SaliencyResult& r);

}  // namespace drc
