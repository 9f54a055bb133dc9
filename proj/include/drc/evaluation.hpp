#pragma once

#include <map>
#include <string>
#include <vector>

#include <json.hpp>

#include "drc/model.hpp"

namespace drc {

struct Prf {
  double p = 0.0;
  double r = 0.0;
  double f1 = 0.0;
  std::size_t tp = 0;
  std::size_t fp = 0;
  std::size_t fn = 0;
  std::size_t support = 0;  // gold instances

  static Prf from_counts(std::size_t tp, std::size_t fp, std::size_t fn);
};

// Micro scores count (sentence, event) pairs of non-negative types only.
struct Metrics {
  Prf micro;
  std::map<std::string, Prf> per_event;
  double major_f1 = 0.0;
  double minor_f1 = 0.0;
  std::size_t sentences = 0;

  nlohmann::json to_json() const;
};

// Scores predicted label sets against gold label sets.
Metrics score_predictions(const std::vector<std::vector<std::string>>& predicted, const Dataset& gold,
                          const MajorMinorPartition& partition);

Metrics evaluate(const Model& m, const Dataset& data, const EventOrder& order);

// Predicted label sets for every sentence of `data` under `order`.
std::vector<std::vector<std::string>> predict_dataset(const Model& m, const Dataset& data, const EventOrder& order);

struct ShuffleReport {
  std::vector<EventOrder> orders;
  std::vector<Metrics> metrics;
  double mean_f1 = 0.0;
};

// Evaluates under `n_shuffles` random orders, each different from S_init.
ShuffleReport shuffle_order_test(const Model& m, const Dataset& data, std::size_t n_shuffles, std::uint64_t seed);

}  // namespace drc
