#include "drc/config.hpp"

#include <algorithm>
#include <charconv>
#include <fstream>
#include <functional>
#include <map>
#include <sstream>

#include "drc/error.hpp"

namespace drc {

namespace {

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

std::string fmt_double(double v) {
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, end);
}

double parse_double(const std::string& key, const std::string& v) {
  double out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a number, got '" + v + "'");
  }
  return out;
}

std::uint64_t parse_uint(const std::string& key, const std::string& v) {
  std::uint64_t out = 0;
  auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc{} || ptr != v.data() + v.size() || v.empty()) {
    throw ConfigError(key + ": expected a non-negative integer, got '" + v + "'");
  }
  return out;
}

bool parse_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "on" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "off" || v == "no") return false;
  throw ConfigError(key + ": expected true or false, got '" + v + "'");
}

std::vector<std::string> split_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string item;
  while (std::getline(ss, item, ',')) out.push_back(trim(item));
  return out;
}

struct Field {
  std::function<void(RunConfig&, const std::string& key, const std::string& value)> set;
  std::function<std::string(const RunConfig&)> get;
};

template <typename T>
Field size_field(T RunConfig::*outer, std::size_t T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { c.*outer.*member = parse_uint(k, v); },
          [=](const RunConfig& c) { return std::to_string(c.*outer.*member); }};
}
template <typename T>
Field double_field(T RunConfig::*outer, double T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { c.*outer.*member = parse_double(k, v); },
          [=](const RunConfig& c) { return fmt_double(c.*outer.*member); }};
}
template <typename T>
Field bool_field(T RunConfig::*outer, bool T::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { c.*outer.*member = parse_bool(k, v); },
          [=](const RunConfig& c) { return std::string(c.*outer.*member ? "true" : "false"); }};
}
Field string_field(std::string RunConfig::*member) {
  return {[=](RunConfig& c, const std::string&, const std::string& v) { c.*member = v; },
          [=](const RunConfig& c) { return c.*member; }};
}
Field top_size_field(std::size_t RunConfig::*member) {
  return {[=](RunConfig& c, const std::string& k, const std::string& v) { c.*member = parse_uint(k, v); },
          [=](const RunConfig& c) { return std::to_string(c.*member); }};
}

const std::map<std::string, Field>& fields() {
  static const std::map<std::string, Field> table = [] {
    std::map<std::string, Field> t;
    t["train"] = string_field(&RunConfig::train_path);
    t["dev"] = string_field(&RunConfig::dev_path);
    t["test"] = string_field(&RunConfig::test_path);
    t["out"] = string_field(&RunConfig::out);

    t["synth.n_event_types"] = size_field(&RunConfig::synth, &SynthConfig::n_event_types);
    t["synth.triggers_per_type"] = size_field(&RunConfig::synth, &SynthConfig::triggers_per_type);
    t["synth.zipf_exponent"] = double_field(&RunConfig::synth, &SynthConfig::zipf_exponent);
    t["synth.multi_label_prob"] = double_field(&RunConfig::synth, &SynthConfig::multi_label_prob);
    t["synth.negative_prob"] = double_field(&RunConfig::synth, &SynthConfig::negative_prob);
    t["synth.filler_vocab_size"] = size_field(&RunConfig::synth, &SynthConfig::filler_vocab_size);
    t["synth.min_len"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                            c.synth.sentence_len_range.first = parse_uint(k, v);
                          },
                          [](const RunConfig& c) { return std::to_string(c.synth.sentence_len_range.first); }};
    t["synth.max_len"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                            c.synth.sentence_len_range.second = parse_uint(k, v);
                          },
                          [](const RunConfig& c) { return std::to_string(c.synth.sentence_len_range.second); }};
    t["synth.seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.synth.seed = parse_uint(k, v); },
                       [](const RunConfig& c) { return std::to_string(c.synth.seed); }};
    t["synth.negative_name"] = {[](RunConfig& c, const std::string&, const std::string& v) { c.synth.negative_name = v; },
                                [](const RunConfig& c) { return c.synth.negative_name; }};
    t["synth.n_train"] = top_size_field(&RunConfig::n_train);
    t["synth.n_dev"] = top_size_field(&RunConfig::n_dev);
    t["synth.n_test"] = top_size_field(&RunConfig::n_test);

    t["train.lr"] = double_field(&RunConfig::hp, &Hyperparams::lr);
    t["train.batch_size"] = size_field(&RunConfig::hp, &Hyperparams::batch_size);
    t["train.epochs"] = size_field(&RunConfig::hp, &Hyperparams::epochs);
    t["train.dropout"] = double_field(&RunConfig::hp, &Hyperparams::dropout_rate);
    t["train.alpha"] = double_field(&RunConfig::hp, &Hyperparams::alpha);
    t["train.threshold"] = double_field(&RunConfig::hp, &Hyperparams::threshold);
    t["train.seed"] = {[](RunConfig& c, const std::string& k, const std::string& v) { c.hp.seed = parse_uint(k, v); },
                       [](const RunConfig& c) { return std::to_string(c.hp.seed); }};
    t["edm.enabled"] = bool_field(&RunConfig::hp, &Hyperparams::edm_enabled);
    t["edm.q"] = double_field(&RunConfig::hp, &Hyperparams::q);
    t["edm.r"] = size_field(&RunConfig::hp, &Hyperparams::r);
    t["edm.compat_sampler"] = bool_field(&RunConfig::hp, &Hyperparams::compat_sampler);

    t["encoder.d_model"] = size_field(&RunConfig::encoder, &EncoderConfig::d_model);
    t["encoder.n_layers"] = size_field(&RunConfig::encoder, &EncoderConfig::n_layers);
    t["encoder.n_heads"] = size_field(&RunConfig::encoder, &EncoderConfig::n_heads);
    t["encoder.ffn_mult"] = size_field(&RunConfig::encoder, &EncoderConfig::ffn_mult);
    t["encoder.max_seq_len"] = size_field(&RunConfig::encoder, &EncoderConfig::max_seq_len);
    t["encoder.share_event_positions"] = bool_field(&RunConfig::encoder, &EncoderConfig::share_event_positions);
    t["encoder.segment_embeddings"] = bool_field(&RunConfig::encoder, &EncoderConfig::segment_embeddings);
    t["encoder.min_word_freq"] = size_field(&RunConfig::hp, &Hyperparams::min_word_freq);

    t["head.cls_input"] = bool_field(&RunConfig::head, &HeadConfig::cls_input);
    t["head.hidden"] = size_field(&RunConfig::head, &HeadConfig::hidden);

    t["sweep.q_grid"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                           c.sweep_q.clear();
                           for (const auto& s : split_list(v)) c.sweep_q.push_back(parse_double(k, s));
                         },
                         [](const RunConfig& c) {
                           std::string s;
                           for (double q : c.sweep_q) s += (s.empty() ? "" : ",") + fmt_double(q);
                           return s;
                         }};
    t["sweep.r_grid"] = {[](RunConfig& c, const std::string& k, const std::string& v) {
                           c.sweep_r.clear();
                           for (const auto& s : split_list(v)) c.sweep_r.push_back(parse_uint(k, s));
                         },
                         [](const RunConfig& c) {
                           std::string s;
                           for (std::size_t r : c.sweep_r) s += (s.empty() ? "" : ",") + std::to_string(r);
                           return s;
                         }};
    t["sweep.jobs"] = top_size_field(&RunConfig::sweep_jobs);
    return t;
  }();
  return table;
}

}  // namespace

void RunConfig::set(const std::string& key, const std::string& value) {
  const auto it = fields().find(key);
  if (it == fields().end()) throw ConfigError("unknown config key '" + key + "'");
  it->second.set(*this, key, value);
}

std::vector<std::string> RunConfig::keys() {
  std::vector<std::string> out;
  for (const auto& [k, f] : fields()) out.push_back(k);
  return out;
}

void RunConfig::validate() const {
  hp.validate();
  encoder.validate();
  if (train_path.empty()) {
    if (!dev_path.empty() || !test_path.empty()) throw ConfigError("dev/test paths require a train path");
    if (n_train == 0) throw ConfigError("synth.n_train must be >= 1");
    if (synth.n_event_types == 0) throw ConfigError("synth.n_event_types must be >= 1");
    if (synth.triggers_per_type == 0) throw ConfigError("synth.triggers_per_type must be >= 1");
    if (!(synth.zipf_exponent >= 0.0)) throw ConfigError("synth.zipf_exponent must be >= 0");
    if (!(synth.multi_label_prob >= 0.0 && synth.multi_label_prob <= 1.0)) {
      throw ConfigError("synth.multi_label_prob must lie in [0, 1]");
    }
    if (!(synth.negative_prob >= 0.0 && synth.negative_prob < 1.0)) {
      throw ConfigError("synth.negative_prob must lie in [0, 1)");
    }
    if (synth.sentence_len_range.first == 0 || synth.sentence_len_range.first > synth.sentence_len_range.second) {
      throw ConfigError("synth.min_len must satisfy 1 <= min_len <= max_len");
    }
  }
  for (double q : sweep_q) {
    if (!(q >= 0.0 && q <= 1.0)) throw ConfigError("sweep.q_grid values must lie in [0, 1]");
  }
  if (sweep_q.empty() || sweep_r.empty()) throw ConfigError("sweep grids must be non-empty");
  if (sweep_jobs == 0) throw ConfigError("sweep.jobs must be >= 1");
}

std::string RunConfig::to_text() const {
  std::string s;
  for (const auto& [k, f] : fields()) s += k + " = " + f.get(*this) + "\n";
  return s;
}

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  std::istringstream in(text);
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    }
    cfg.set(trim(t.substr(0, eq)), trim(t.substr(eq + 1)));
  }
  return cfg;
}

RunConfig load_run_config(const std::filesystem::path& path) {
  std::ifstream f(path);
  if (!f) throw ConfigError("cannot open config file " + path.string());
  std::stringstream ss;
  ss << f.rdbuf();
  return parse_run_config(ss.str());
}

void apply_override(RunConfig& cfg, const std::string& assignment) {
  const auto eq = assignment.find('=');
  if (eq == std::string::npos) throw ConfigError("override '" + assignment + "' must be key=value");
  cfg.set(trim(assignment.substr(0, eq)), trim(assignment.substr(eq + 1)));
}

Splits load_splits(const RunConfig& cfg) {
  Splits s;
  if (!cfg.train_path.empty()) {
    s.train = load_corpus(cfg.train_path);
    if (!cfg.dev_path.empty()) s.dev = load_corpus(cfg.dev_path);
    if (!cfg.test_path.empty()) s.test = load_corpus(cfg.test_path);
    return s;
  }
  SynthConfig sc = cfg.synth;
  sc.n_sentences = cfg.n_train + cfg.n_dev + cfg.n_test;
  SynthCorpus corpus = generate_synthetic(sc);
  s.train = corpus.data.slice(0, cfg.n_train);
  s.dev = corpus.data.slice(cfg.n_train, cfg.n_dev);
  s.test = corpus.data.slice(cfg.n_train + cfg.n_dev, cfg.n_test);
  s.triggers = std::move(corpus.triggers);
  return s;
}

}  // namespace drc
