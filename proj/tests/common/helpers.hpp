#pragma once

#include <string>
#include <vector>

#include "drc/corpus.hpp"
#include "drc/derangement.hpp"
#include "drc/encoder.hpp"
#include "drc/rng.hpp"
#include "drc/tensor.hpp"

namespace testing_util {

inline drc::Tensor random_matrix(std::size_t r, std::size_t c, drc::Rng& rng, double scale = 1.0) {
  drc::Tensor t = drc::Tensor::matrix(r, c);
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = scale * rng.normal();
  return t;
}

inline std::vector<drc::EventType> inventory(const std::vector<std::string>& names, const std::string& negative) {
  std::vector<drc::EventType> inv;
  for (const auto& n : names) inv.push_back({n, false});
  inv.push_back({negative, true});
  return inv;
}

// Four event types plus a negative, a handful of short sentences.
inline drc::Dataset tiny_dataset() {
  drc::Dataset d(inventory({"Attack", "Die", "Meet", "Transport"}, "None"));
  d.add({{"they", "sent", "him"}, {"Transport"}});
  d.add({{"troops", "attacked", "the", "town"}, {"Attack"}});
  d.add({{"he", "died", "after", "the", "attack"}, {"Attack", "Die"}});
  d.add({{"leaders", "met", "today"}, {"Meet"}});
  d.add({{"nothing", "happened"}, {}});
  d.add({{"they", "attacked", "again"}, {"Attack"}});
  return d;
}

inline drc::EncoderConfig tiny_encoder() {
  drc::EncoderConfig c;
  c.d_model = 8;
  c.n_layers = 2;
  c.n_heads = 2;
  c.ffn_mult = 2;
  c.max_seq_len = 32;
  c.dropout_rate = 0.0;
  return c;
}

inline drc::EventOrder order_of(const std::vector<std::string>& names) { return drc::EventOrder{names}; }

inline double max_abs_diff(const drc::Tensor& a, const drc::Tensor& b) {
  double m = 0;
  for (std::size_t i = 0; i < a.size(); ++i) m = std::max(m, std::abs(a[i] - b[i]));
  return m;
}

}  // namespace testing_util
