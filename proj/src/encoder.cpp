#include "drc/encoder.hpp"

#include <algorithm>
#include <cmath>

#include "drc/error.hpp"

namespace drc {

using ad::Var;

// ---- vocabulary -------------------------------------------------------------------

Vocabulary::Vocabulary(const std::vector<EventType>& inventory, const std::vector<std::string>& words) {
  tokens_ = {"[PAD]", "[UNK]", "[CLS]", "[SEP]"};
  for (const EventType& e : inventory) {
    event_ids_[e.name] = static_cast<int>(tokens_.size());
    tokens_.push_back(bracketed(e.name));
  }
  std::vector<std::string> sorted = words;
  std::sort(sorted.begin(), sorted.end());
  sorted.erase(std::unique(sorted.begin(), sorted.end()), sorted.end());
  for (const std::string& w : sorted) {
    word_ids_[w] = static_cast<int>(tokens_.size());
    tokens_.push_back(w);
  }
}

int Vocabulary::word_id(const std::string& word) const {
  auto it = word_ids_.find(word);
  return it == word_ids_.end() ? kUnk : it->second;
}

int Vocabulary::event_id(const std::string& event) const {
  auto it = event_ids_.find(event);
  if (it == event_ids_.end()) throw ConfigError("event '" + event + "' has no token in the vocabulary");
  return it->second;
}

nlohmann::json Vocabulary::to_json() const {
  nlohmann::json j;
  std::vector<std::string> events(event_ids_.size()), words;
  for (const auto& [name, id] : event_ids_) events[id - 4] = name;
  for (const auto& [w, id] : word_ids_) words.push_back(w);
  j["events"] = events;
  j["words"] = words;
  return j;
}

Vocabulary Vocabulary::from_json(const nlohmann::json& j) {
  std::vector<EventType> inv;
  for (const auto& e : j.at("events")) inv.push_back({e.get<std::string>(), false});
  return Vocabulary(inv, j.at("words").get<std::vector<std::string>>());
}

Vocabulary build_vocabulary(const Dataset& d, std::size_t min_freq) {
  std::map<std::string, std::size_t> freq;
  for (const Sentence& s : d.sentences()) {
    for (const std::string& w : s.tokens) ++freq[w];
  }
  std::vector<std::string> words;
  for (const auto& [w, f] : freq) {
    if (f >= min_freq) words.push_back(w);
  }
  return Vocabulary(d.inventory(), words);
}

// ---- configuration ----------------------------------------------------------------

void EncoderConfig::validate() const {
  if (d_model == 0 || n_heads == 0 || d_model % n_heads != 0) {
    throw ConfigError("encoder: d_model (" + std::to_string(d_model) + ") must be a positive multiple of n_heads (" +
                      std::to_string(n_heads) + ")");
  }
  if (n_layers == 0) throw ConfigError("encoder: n_layers must be >= 1");
  if (ffn_mult == 0) throw ConfigError("encoder: ffn_mult must be >= 1");
  if (max_seq_len < 3) throw ConfigError("encoder: max_seq_len must be >= 3");
  if (!(dropout_rate >= 0.0 && dropout_rate < 1.0)) throw ConfigError("encoder: dropout_rate must lie in [0, 1)");
}

nlohmann::json EncoderConfig::to_json() const {
  return {{"d_model", d_model},
          {"n_layers", n_layers},
          {"n_heads", n_heads},
          {"ffn_mult", ffn_mult},
          {"max_seq_len", max_seq_len},
          {"dropout_rate", dropout_rate},
          {"share_event_positions", share_event_positions},
          {"segment_embeddings", segment_embeddings}};
}

EncoderConfig EncoderConfig::from_json(const nlohmann::json& j) {
  EncoderConfig c;
  c.d_model = j.at("d_model");
  c.n_layers = j.at("n_layers");
  c.n_heads = j.at("n_heads");
  c.ffn_mult = j.at("ffn_mult");
  c.max_seq_len = j.at("max_seq_len");
  c.dropout_rate = j.at("dropout_rate");
  c.share_event_positions = j.at("share_event_positions");
  c.segment_embeddings = j.at("segment_embeddings");
  return c;
}

// ---- input layout --------------------------------------------------------------------

EncodedInput build_input(const Sentence& x, const EventOrder& order, const Vocabulary& v,
                         const EncoderConfig& cfg) {
  const std::size_t len = x.tokens.size() + order.size() + 2;
  if (len > cfg.max_seq_len) {
    throw LengthError("input of " + std::to_string(len) + " tokens exceeds max_seq_len " +
                      std::to_string(cfg.max_seq_len));
  }
  EncodedInput in;
  in.n_words = x.tokens.size();
  in.n_events = order.size();
  in.token_ids.reserve(len);
  in.token_ids.push_back(Vocabulary::kCls);
  for (const std::string& w : x.tokens) in.token_ids.push_back(v.word_id(w));
  in.token_ids.push_back(Vocabulary::kSep);
  for (const std::string& e : order.sequence) in.token_ids.push_back(v.event_id(e));

  const int first_event = static_cast<int>(in.first_event_row());
  for (std::size_t i = 0; i < len; ++i) {
    const int pos = static_cast<int>(i);
    in.position_ids.push_back(cfg.share_event_positions && pos > first_event ? first_event : pos);
    in.segment_ids.push_back(pos >= first_event ? 1 : 0);
  }
  return in;
}

// ---- parameters ------------------------------------------------------------------------

namespace {

Tensor normal(std::size_t rows, std::size_t cols, double std, Rng& rng) {
  Tensor t = Tensor::matrix(rows, cols);
  for (double& v : t.data()) v = std * rng.normal();
  return t;
}

std::string layer_key(std::size_t l, const char* leaf) { return "layer" + std::to_string(l) + "." + leaf; }

}  // namespace

void init_encoder_params(ParamStore& params, const EncoderConfig& cfg, std::size_t vocab_size, Rng& rng) {
  cfg.validate();
  const std::size_t d = cfg.d_model, f = cfg.d_model * cfg.ffn_mult;
  const double emb_std = 0.02;
  const double lin_std = 1.0 / std::sqrt(static_cast<double>(d));
  const double ffn_out_std = 1.0 / std::sqrt(static_cast<double>(f));
  params.add("embed.token", normal(vocab_size, d, emb_std, rng));
  params.add("embed.position", normal(cfg.max_seq_len, d, emb_std, rng));
  params.add("embed.segment", normal(2, d, emb_std, rng));
  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    params.add(layer_key(l, "ln1.gamma"), Tensor::matrix(1, d, 1.0));
    params.add(layer_key(l, "ln1.beta"), Tensor::matrix(1, d, 0.0));
    for (const char* w : {"attn.wq", "attn.wk", "attn.wv", "attn.wo"}) {
      params.add(layer_key(l, w), normal(d, d, lin_std, rng));
    }
    for (const char* b : {"attn.bq", "attn.bk", "attn.bv", "attn.bo"}) {
      params.add(layer_key(l, b), Tensor::matrix(1, d, 0.0));
    }
    params.add(layer_key(l, "ln2.gamma"), Tensor::matrix(1, d, 1.0));
    params.add(layer_key(l, "ln2.beta"), Tensor::matrix(1, d, 0.0));
    params.add(layer_key(l, "ffn.w1"), normal(d, f, lin_std, rng));
    params.add(layer_key(l, "ffn.b1"), Tensor::matrix(1, f, 0.0));
    params.add(layer_key(l, "ffn.w2"), normal(f, d, ffn_out_std, rng));
    params.add(layer_key(l, "ffn.b2"), Tensor::matrix(1, d, 0.0));
  }
  params.add("final_ln.gamma", Tensor::matrix(1, d, 1.0));
  params.add("final_ln.beta", Tensor::matrix(1, d, 0.0));
}

ParamVars bind_params(ad::Tape& tape, const ParamStore& params, bool trainable) {
  ParamVars pv{&params, {}};
  pv.vars.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    pv.vars.push_back(trainable ? tape.leaf(params[i]) : tape.constant(params[i]));
  }
  return pv;
}

// ---- forward ----------------------------------------------------------------------------

namespace {

Var linear(Var x, Var w, Var b) { return ad::add_row(ad::matmul(x, w), b); }

}  // namespace

BatchEncoding encode_batch(const ParamVars& p, const EncoderConfig& cfg, std::span<const EncodedInput> inputs,
                           bool training, Rng& dropout_rng) {
  if (inputs.empty()) throw ContractError("encode_batch: empty batch");
  const Tensor& tok = p("embed.token").value();
  if (tok.cols() != cfg.d_model) {
    throw ConfigError("encoder: parameter width " + std::to_string(tok.cols()) + " does not match d_model " +
                      std::to_string(cfg.d_model));
  }
  BatchEncoding out;
  std::vector<int> ids, pos, seg;
  out.offsets.push_back(0);
  for (const EncodedInput& in : inputs) {
    if (in.length() > cfg.max_seq_len) throw LengthError("encode_batch: input longer than max_seq_len");
    ids.insert(ids.end(), in.token_ids.begin(), in.token_ids.end());
    pos.insert(pos.end(), in.position_ids.begin(), in.position_ids.end());
    seg.insert(seg.end(), in.segment_ids.begin(), in.segment_ids.end());
    out.offsets.push_back(ids.size());
  }

  out.token_embeddings = ad::gather_rows(p("embed.token"), ids);
  Var x = ad::add(out.token_embeddings, ad::gather_rows(p("embed.position"), pos));
  if (cfg.segment_embeddings) x = ad::add(x, ad::gather_rows(p("embed.segment"), seg));
  x = ad::dropout(x, cfg.dropout_rate, training, dropout_rng);

  for (std::size_t l = 0; l < cfg.n_layers; ++l) {
    auto w = [&](const char* leaf) { return p(layer_key(l, leaf)); };
    const Var a = ad::layer_norm(x, w("ln1.gamma"), w("ln1.beta"));
    const Var q = linear(a, w("attn.wq"), w("attn.bq"));
    const Var k = linear(a, w("attn.wk"), w("attn.bk"));
    const Var v = linear(a, w("attn.wv"), w("attn.bv"));
    const Var att = ad::segment_attention(q, k, v, out.offsets, cfg.n_heads);
    const Var o = linear(att, w("attn.wo"), w("attn.bo"));
    x = ad::add(x, ad::dropout(o, cfg.dropout_rate, training, dropout_rng));

    const Var b = ad::layer_norm(x, w("ln2.gamma"), w("ln2.beta"));
    const Var h = ad::gelu(linear(b, w("ffn.w1"), w("ffn.b1")));
    const Var f = linear(h, w("ffn.w2"), w("ffn.b2"));
    x = ad::add(x, ad::dropout(f, cfg.dropout_rate, training, dropout_rng));
  }
  out.hidden = ad::layer_norm(x, p("final_ln.gamma"), p("final_ln.beta"));
  return out;
}

HiddenStates encode(const EncodedInput& input, const ParamStore& params, const EncoderConfig& cfg, bool training,
                    std::uint64_t seed) {
  ad::Tape tape;
  const ParamVars p = bind_params(tape, params, false);
  Rng rng(seed);
  const BatchEncoding enc = encode_batch(p, cfg, std::span<const EncodedInput>(&input, 1), training, rng);
  const Tensor& h = enc.hidden.value();
  const std::size_t d = h.cols();
  auto rows = [&](std::size_t begin, std::size_t count) {
    Tensor t = Tensor::matrix(count, d);
    std::copy_n(h.data().begin() + begin * d, count * d, t.data().begin());
    return t;
  };
  HiddenStates hs;
  hs.cls = rows(0, 1);
  hs.words = rows(1, input.n_words);
  hs.sep = rows(input.n_words + 1, 1);
  hs.events = rows(input.first_event_row(), input.n_events);
  return hs;
}

}  // namespace drc
