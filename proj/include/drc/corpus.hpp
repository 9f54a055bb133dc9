#pragma once

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

namespace drc {

struct EventType {
  std::string name;
  bool is_negative = false;

  bool operator==(const EventType&) const = default;
};

struct Sentence {
  std::vector<std::string> tokens;
  // Sorted, duplicate-free event names.
  std::vector<std::string> labels;

  bool operator==(const Sentence&) const = default;
};

class Dataset {
 public:
  Dataset() = default;
  // Validates the inventory (unique names, exactly one negative type).
  explicit Dataset(std::vector<EventType> inventory);

  // Normalizes the label set (sorted, deduplicated, empty -> negative) and
  // validates it against the inventory.
  void add(Sentence s);

  const std::vector<EventType>& inventory() const { return inventory_; }
  const std::vector<Sentence>& sentences() const { return sentences_; }
  std::size_t num_types() const { return inventory_.size(); }
  std::size_t size() const { return sentences_.size(); }

  const std::string& negative() const { return inventory_[negative_index_].name; }
  std::size_t negative_index() const { return negative_index_; }
  std::optional<std::size_t> index_of(const std::string& name) const;

  // Instance count per inventory index; one per (sentence, event) pair.
  std::vector<std::size_t> instance_counts() const;
  std::size_t total_instances() const;

  // Same inventory, sentences [begin, begin + count).
  Dataset slice(std::size_t begin, std::size_t count) const;

  bool operator==(const Dataset& other) const {
    return inventory_ == other.inventory_ && sentences_ == other.sentences_;
  }

 private:
  std::vector<EventType> inventory_;
  std::map<std::string, std::size_t> index_;
  std::size_t negative_index_ = 0;
  std::vector<Sentence> sentences_;
};

struct EventCount {
  std::string name;
  std::size_t count = 0;

  bool operator==(const EventCount&) const = default;
};

// Event types by descending instance count, ties by ascending name.
struct SortedEventSeq {
  std::vector<EventCount> ordered;

  std::vector<std::string> names() const;
  std::size_t total() const;
};

struct MajorMinorPartition {
  std::size_t k = 0;
  std::vector<std::string> majors;  // in S_SA order
  std::vector<std::string> minors;  // in S_SA order
  double alpha = 0.5;

  bool is_major(const std::string& name) const;
};

struct SynthConfig {
  std::size_t n_event_types = 8;
  std::size_t triggers_per_type = 3;
  double zipf_exponent = 1.5;
  std::size_t n_sentences = 2000;
  double multi_label_prob = 0.1;
  double negative_prob = 0.1;
  std::size_t filler_vocab_size = 200;
  std::pair<std::size_t, std::size_t> sentence_len_range{5, 12};
  std::uint64_t seed = 7;
  std::string negative_name = "None";
};

struct SynthCorpus {
  Dataset data;
  // Event name -> planted trigger words (the provenance sidecar).
  std::map<std::string, std::vector<std::string>> triggers;
  // Normalized Zipf weight per non-negative event, in inventory order.
  std::vector<double> zipf_weights;
};

// ---- operations ------------------------------------------------------------------

Dataset load_corpus(const std::filesystem::path& path);
Dataset parse_corpus(const std::string& text);
void write_corpus(const Dataset& d, const std::filesystem::path& path);
std::string corpus_to_jsonl(const Dataset& d);

SortedEventSeq sorted_event_sequence(const Dataset& d);
SortedEventSeq sorted_event_sequence(const std::vector<EventCount>& counts);

// k = argmin_k |sum_{i<=k} |e_i| - alpha*N|, smaller k on ties.
MajorMinorPartition partition_major_minor(const SortedEventSeq& s, double alpha, std::size_t total);
MajorMinorPartition partition_major_minor(const SortedEventSeq& s, double alpha);

double imbalance_ratio(const Dataset& d);
double imbalance_ratio(const std::vector<std::size_t>& counts);

SynthCorpus generate_synthetic(const SynthConfig& cfg);
void write_provenance(const SynthCorpus& c, const std::filesystem::path& path);
std::map<std::string, std::vector<std::string>> load_provenance(const std::filesystem::path& path);

// Zipf weights w_i proportional to 1 / i^s, i = 1..n, normalized to sum 1.
std::vector<double> zipf_weights(std::size_t n, double exponent);

}  // namespace drc
