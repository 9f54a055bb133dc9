#include "drc/attribution.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include "drc/error.hpp"
#include "drc/svg.hpp"

namespace drc {

std::size_t SaliencyResult::argmax() const {
  return static_cast<std::size_t>(std::max_element(scores.begin(), scores.end()) - scores.begin());
}

nlohmann::json SaliencyResult::to_json() const {
  nlohmann::json j;
  j["target"] = target;
  j["prob"] = prob;
  j["tokens"] = nlohmann::json::array();
  for (std::size_t i = 0; i < tokens.size(); ++i) {
    j["tokens"].push_back({{"token", tokens[i]}, {"score", scores[i]}, {"grad_norm", grad_norms[i]}});
  }
  return j;
}

SaliencyResult saliency(const Model& m, const Sentence& x, const std::string& target, const EventOrder& order) {
  const std::size_t slot = order.position_of(target);
  if (slot == order.size()) throw ConfigError("saliency: event '" + target + "' is not in the event order");
  const EncodedInput input = build_input(x, order, m.vocab, m.encoder);

  ad::Tape tape;
  const ParamVars p = bind_params(tape, m.params, true);
  Rng unused(0);
  const std::span<const EncodedInput> one(&input, 1);
  const BatchEncoding enc = encode_batch(p, m.encoder, one, false, unused);
  const ad::Var probs = head_forward(p, m.head, enc, one);
  const ad::Var out = ad::element(probs, 0, slot);
  const ad::Gradients grads = tape.backward(out);

  SaliencyResult res;
  res.tokens = x.tokens;
  res.target = target;
  res.prob = out.value().item();
  const Tensor g = grads.of(enc.token_embeddings);
  const Tensor& e = enc.token_embeddings.value();
  const std::size_t d = e.cols();
  for (std::size_t w = 0; w < x.tokens.size(); ++w) {
    const std::size_t row = 1 + w;  // after [CLS]
    double dot = 0, sq = 0;
    for (std::size_t c = 0; c < d; ++c) {
      dot += g(row, c) * e(row, c);
      sq += g(row, c) * g(row, c);
    }
    res.scores.push_back(dot);
    res.grad_norms.push_back(std::sqrt(sq));
  }
  return res;
}

std::vector<double> normalized_scores(const SaliencyResult& r) {
  double mx = 0;
  for (double s : r.scores) mx = std::max(mx, std::abs(s));
  std::vector<double> out(r.scores.size(), 0.0);
  if (mx == 0.0) return out;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = r.scores[i] / mx;
  return out;
}

std::string render_heatmap_svg(const std::vector<SaliencyResult>& results) {
  constexpr double row_h = 34, label_w = 150, cell_w = 84, top = 20;
  std::size_t max_tokens = 1;
  for (const auto& r : results) max_tokens = std::max(max_tokens, r.tokens.size());
  const double W = label_w + cell_w * static_cast<double>(max_tokens) + 20;
  const double H = top + row_h * static_cast<double>(results.size()) + 20;
  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << W << "\" height=\"" << H
     << "\" font-family=\"sans-serif\" font-size=\"12\">\n<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  for (std::size_t r = 0; r < results.size(); ++r) {
    const auto& res = results[r];
    const double y = top + row_h * static_cast<double>(r);
    char prob[32];
    std::snprintf(prob, sizeof prob, " (p=%.3f)", res.prob);
    os << "<text x=\"" << label_w - 8 << "\" y=\"" << y + row_h / 2 + 4 << "\" text-anchor=\"end\">"
       << svg::escape(res.target) << prob << "</text>\n";
    const std::vector<double> norm = normalized_scores(res);
    for (std::size_t i = 0; i < res.tokens.size(); ++i) {
      const double v = norm[i];
      const int fade = static_cast<int>(std::lround(255.0 * (1.0 - std::abs(v))));
      char fill[16];
      if (v >= 0) {
        std::snprintf(fill, sizeof fill, "#ff%02x%02x", fade, fade);
      } else {
        std::snprintf(fill, sizeof fill, "#%02x%02xff", fade, fade);
      }
      const double x = label_w + cell_w * static_cast<double>(i);
      os << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell_w - 2 << "\" height=\"" << row_h - 4
         << "\" fill=\"" << fill << "\"/>\n";
      os << "<text x=\"" << x + cell_w / 2 << "\" y=\"" << y + row_h / 2 + 2 << "\" text-anchor=\"middle\">"
         << svg::escape(res.tokens[i]) << "</text>\n";
    }
  }
  os << "</svg>\n";
  return os.str();
}

std::string render_heatmap_text(const std::vector<SaliencyResult>& results) {
  std::ostringstream os;
  for (const auto& res : results) {
    char head[64];
    std::snprintf(head, sizeof head, " (p=%.3f)", res.prob);
    os << res.target << head << "\n";
    const std::vector<double> norm = normalized_scores(res);
    for (std::size_t i = 0; i < res.tokens.size(); ++i) {
      char line[64];
      std::snprintf(line, sizeof line, "%+.4f", norm[i]);
      const auto bar = static_cast<std::size_t>(std::lround(std::abs(norm[i]) * 20.0));
      os << "  " << res.tokens[i] << ':' << line << ' ' << std::string(bar, norm[i] < 0 ? '-' : '#') << "\n";
    }
  }
  return os.str();
}

}  // namespace drc
