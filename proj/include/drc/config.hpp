#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "drc/corpus.hpp"
#include "drc/training.hpp"

namespace drc {

// Flat `key = value` run configuration. Lines starting with '#' are comments.
// Unknown keys and malformed values raise ConfigError naming the key.
struct RunConfig {
  std::string train_path;  // empty: use the synthetic corpus
  std::string dev_path;
  std::string test_path;

  SynthConfig synth;
  std::size_t n_train = 2000;
  std::size_t n_dev = 400;
  std::size_t n_test = 400;

  Hyperparams hp;
  EncoderConfig encoder;
  HeadConfig head;

  std::vector<double> sweep_q{0.1, 0.2, 0.5};
  std::vector<std::size_t> sweep_r{2, 4, 6};
  std::size_t sweep_jobs = 1;

  std::string out;  // empty: $DRC_OUT_ROOT (or "runs") / <command>

  // Applies one `key=value` assignment.
  void set(const std::string& key, const std::string& value);
  void validate() const;
  // Every key with its current value, one per line, sorted by key. Parsing the
  // result yields an identical config.
  std::string to_text() const;

  static std::vector<std::string> keys();
};

RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::filesystem::path& path);
// Parses "key=value" (as given to --set).
void apply_override(RunConfig& cfg, const std::string& assignment);

struct Splits {
  Dataset train;
  Dataset dev;
  Dataset test;
  std::map<std::string, std::vector<std::string>> triggers;  // synthetic only
};

// Loads the configured corpus files, or generates n_train + n_dev + n_test
// synthetic sentences and splits them in order.
Splits load_splits(const RunConfig& cfg);

}  // namespace drc
