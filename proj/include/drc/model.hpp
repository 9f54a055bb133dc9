#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include "drc/classifier.hpp"
#include "drc/corpus.hpp"
#include "drc/derangement.hpp"
#include "drc/encoder.hpp"

namespace drc {

// Everything needed to run the detector on new sentences: configuration,
// vocabulary, inventory, the fixed initial event order and all weights.
struct Model {
  EncoderConfig encoder;
  HeadConfig head;
  Vocabulary vocab;
  std::vector<EventType> inventory;
  EventOrder s_init;
  SortedEventSeq s_sa;
  MajorMinorPartition partition;
  double threshold = 0.5;
  ParamStore params;

  const std::string& negative() const;
  bool is_major(const std::string& event) const { return partition.is_major(event); }
};

// Fresh model for `train`: vocabulary, S_SA and partition from the training
// data, S_init drawn from `seed`, weights initialized from `seed`.
Model create_model(const Dataset& train, const EncoderConfig& enc, const HeadConfig& head, double alpha,
                   double threshold, std::size_t min_word_freq, std::uint64_t seed);

// Probabilities for a batch of sentences, each encoded with its own order.
// Returns one row of n probabilities per sentence, in slot order.
std::vector<std::vector<double>> predict_batch(const Model& m, std::span<const Sentence> xs,
                                               std::span<const EventOrder> orders);

// Event labels for one sentence under `order`.
std::vector<std::string> predict_labels(const Model& m, const Sentence& x, const EventOrder& order);

void save_model(const Model& m, const std::filesystem::path& path);
Model load_model(const std::filesystem::path& path);

}  // namespace drc
