#pragma once

// Reading-comprehension encoder. A sentence and all event tokens are packed
// as "[CLS] w_1 ... w_|x| [SEP] [E_s1] ... [E_sn]" and run through a small
// pre-LN transformer with full self-attention, so event tokens attend to the
// context and the context attends to the event tokens.

#include <map>
#include <span>
#include <string>
#include <vector>

#include <json.hpp>

#include "drc/autodiff.hpp"
#include "drc/corpus.hpp"
#include "drc/derangement.hpp"
#include "drc/param_store.hpp"
#include "drc/rng.hpp"

namespace drc {

class Vocabulary {
 public:
  static constexpr int kPad = 0;
  static constexpr int kUnk = 1;
  static constexpr int kCls = 2;
  static constexpr int kSep = 3;

  Vocabulary() = default;
  // Specials, then one "[Name]" token per inventory entry, then words in
  // lexicographic order.
  Vocabulary(const std::vector<EventType>& inventory, const std::vector<std::string>& words);

  int word_id(const std::string& word) const;  // kUnk when absent
  int event_id(const std::string& event) const;  // throws ConfigError when absent
  std::size_t size() const { return tokens_.size(); }
  const std::string& token(int id) const { return tokens_[id]; }
  std::size_t num_words() const { return word_ids_.size(); }
  std::size_t num_events() const { return event_ids_.size(); }

  static std::string bracketed(const std::string& event) { return "[" + event + "]"; }

  nlohmann::json to_json() const;
  static Vocabulary from_json(const nlohmann::json& j);

 private:
  std::vector<std::string> tokens_;
  std::map<std::string, int> word_ids_;
  std::map<std::string, int> event_ids_;  // keyed by the bare event name
};

// Words seen fewer than `min_freq` times in `d` map to [UNK].
Vocabulary build_vocabulary(const Dataset& d, std::size_t min_freq = 1);

struct EncoderConfig {
  std::size_t d_model = 64;
  std::size_t n_layers = 2;
  std::size_t n_heads = 4;
  std::size_t ffn_mult = 4;
  std::size_t max_seq_len = 96;
  double dropout_rate = 0.1;
  bool share_event_positions = false;
  bool segment_embeddings = true;

  void validate() const;
  nlohmann::json to_json() const;
  static EncoderConfig from_json(const nlohmann::json& j);
};

struct EncodedInput {
  std::vector<int> token_ids;
  std::vector<int> position_ids;
  std::vector<int> segment_ids;
  std::size_t n_words = 0;
  std::size_t n_events = 0;

  std::size_t length() const { return token_ids.size(); }
  std::size_t first_event_row() const { return n_words + 2; }
};

EncodedInput build_input(const Sentence& x, const EventOrder& order, const Vocabulary& v,
                         const EncoderConfig& cfg);

struct HiddenStates {
  Tensor cls;     // [1, d]
  Tensor words;   // [|x|, d]
  Tensor sep;     // [1, d]
  Tensor events;  // [n, d], slot order of the EventOrder used to build the input
};

// Adds every encoder tensor to `params` with the given initialization.
void init_encoder_params(ParamStore& params, const EncoderConfig& cfg, std::size_t vocab_size, Rng& rng);

// Tape bindings for one forward pass; `vars[i]` is the leaf of params[i].
struct ParamVars {
  const ParamStore* store = nullptr;
  std::vector<ad::Var> vars;

  ad::Var operator()(const std::string& name) const { return vars[store->index(name)]; }
};

ParamVars bind_params(ad::Tape& tape, const ParamStore& params, bool trainable = true);

struct BatchEncoding {
  ad::Var hidden;            // [sum of lengths, d]
  ad::Var token_embeddings;  // gathered token embedding rows, same layout
  std::vector<std::size_t> offsets;  // row offset of each input, plus the end
};

BatchEncoding encode_batch(const ParamVars& p, const EncoderConfig& cfg, std::span<const EncodedInput> inputs,
                           bool training, Rng& dropout_rng);

// Single-input convenience wrapper returning plain tensors.
HiddenStates encode(const EncodedInput& input, const ParamStore& params, const EncoderConfig& cfg,
                    bool training, std::uint64_t seed);

}  // namespace drc
