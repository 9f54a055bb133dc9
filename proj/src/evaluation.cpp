#include "drc/evaluation.hpp"

#include <algorithm>
#include <set>

#include "drc/error.hpp"

namespace drc {

Prf Prf::from_counts(std::size_t tp, std::size_t fp, std::size_t fn) {
  Prf s;
  s.tp = tp;
  s.fp = fp;
  s.fn = fn;
  s.support = tp + fn;
  s.p = tp + fp ? static_cast<double>(tp) / static_cast<double>(tp + fp) : 0.0;
  s.r = tp + fn ? static_cast<double>(tp) / static_cast<double>(tp + fn) : 0.0;
  s.f1 = s.p + s.r > 0.0 ? 2.0 * s.p * s.r / (s.p + s.r) : 0.0;
  return s;
}

nlohmann::json Metrics::to_json() const {
  auto prf = [](const Prf& s) {
    return nlohmann::json{{"p", s.p}, {"r", s.r}, {"f1", s.f1}, {"tp", s.tp}, {"fp", s.fp}, {"fn", s.fn},
                          {"support", s.support}};
  };
  nlohmann::json j;
  j["micro"] = prf(micro);
  j["per_event"] = nlohmann::json::object();
  for (const auto& [name, s] : per_event) j["per_event"][name] = prf(s);
  j["major_f1"] = major_f1;
  j["minor_f1"] = minor_f1;
  j["sentences"] = sentences;
  return j;
}

Metrics score_predictions(const std::vector<std::vector<std::string>>& predicted, const Dataset& gold,
                          const MajorMinorPartition& partition) {
  if (predicted.size() != gold.size()) throw ContractError("score_predictions: prediction count mismatch");
  const std::string& neg = gold.negative();
  std::map<std::string, std::array<std::size_t, 3>> counts;  // tp, fp, fn
  for (const EventType& e : gold.inventory()) {
    if (!e.is_negative) counts[e.name] = {0, 0, 0};
  }
  for (std::size_t i = 0; i < gold.size(); ++i) {
    std::set<std::string> pred(predicted[i].begin(), predicted[i].end());
    std::set<std::string> ref(gold.sentences()[i].labels.begin(), gold.sentences()[i].labels.end());
    pred.erase(neg);
    ref.erase(neg);
    for (const std::string& e : pred) {
      auto it = counts.find(e);
      if (it == counts.end()) throw ConfigError("predicted event '" + e + "' is not in the inventory");
      ++it->second[ref.contains(e) ? 0 : 1];
    }
    for (const std::string& e : ref) {
      if (!pred.contains(e)) ++counts[e][2];
    }
  }
  Metrics m;
  m.sentences = gold.size();
  std::array<std::size_t, 3> all{}, major{}, minor{};
  for (const auto& [name, c] : counts) {
    m.per_event[name] = Prf::from_counts(c[0], c[1], c[2]);
    auto& bucket = partition.is_major(name) ? major : minor;
    for (int k = 0; k < 3; ++k) {
      all[k] += c[k];
      bucket[k] += c[k];
    }
  }
  m.micro = Prf::from_counts(all[0], all[1], all[2]);
  m.major_f1 = Prf::from_counts(major[0], major[1], major[2]).f1;
  m.minor_f1 = Prf::from_counts(minor[0], minor[1], minor[2]).f1;
  return m;
}

namespace {

void check_inventory(const Model& m, const Dataset& data, const EventOrder& order) {
  std::set<std::string> model_types, data_types, order_types(order.sequence.begin(), order.sequence.end());
  for (const EventType& e : m.inventory) model_types.insert(e.name);
  for (const EventType& e : data.inventory()) data_types.insert(e.name);
  if (model_types != data_types) throw ConfigError("evaluation data inventory does not match the model");
  if (order_types != model_types || order.size() != model_types.size()) {
    throw ConfigError("event order must contain every inventory type exactly once");
  }
}

}  // namespace

std::vector<std::vector<std::string>> predict_dataset(const Model& m, const Dataset& data, const EventOrder& order) {
  check_inventory(m, data, order);
  constexpr std::size_t kChunk = 64;
  const std::size_t neg_slot = order.position_of(m.negative());
  std::vector<std::vector<std::string>> out;
  out.reserve(data.size());
  const std::vector<EventOrder> orders(kChunk, order);
  for (std::size_t b = 0; b < data.size(); b += kChunk) {
    const std::size_t len = std::min(kChunk, data.size() - b);
    const auto probs = predict_batch(m, std::span<const Sentence>(data.sentences()).subspan(b, len),
                                     std::span<const EventOrder>(orders).first(len));
    for (const auto& row : probs) {
      std::vector<std::string> labels;
      for (std::size_t slot : decide_labels(row, m.threshold, neg_slot)) labels.push_back(order.sequence[slot]);
      out.push_back(std::move(labels));
    }
  }
  return out;
}

Metrics evaluate(const Model& m, const Dataset& data, const EventOrder& order) {
  return score_predictions(predict_dataset(m, data, order), data, m.partition);
}

ShuffleReport shuffle_order_test(const Model& m, const Dataset& data, std::size_t n_shuffles, std::uint64_t seed) {
  ShuffleReport rep;
  if (m.s_init.size() < 2) throw DomainError("shuffle_order_test: need at least two event types");
  Rng rng(seed);
  for (std::size_t i = 0; i < n_shuffles; ++i) {
    EventOrder o = m.s_init;
    do {
      rng.shuffle(o.sequence);
    } while (o == m.s_init);
    rep.metrics.push_back(evaluate(m, data, o));
    rep.mean_f1 += rep.metrics.back().micro.f1;
    rep.orders.push_back(std::move(o));
  }
  if (n_shuffles) rep.mean_f1 /= static_cast<double>(n_shuffles);
  return rep;
}

}  // namespace drc
