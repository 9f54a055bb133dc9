#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>

#include <json.hpp>

#include "drc/corpus.hpp"
#include "drc/error.hpp"
#include "drc/rng.hpp"

namespace drc {

namespace {

// ACE2005 subtype names, used for the first types of a synthetic inventory.
constexpr const char* kEventNames[] = {
    "Attack",         "Transport",       "Die",           "Meet",          "Injure",
    "Transfer-Money", "Elect",           "Marry",         "Sue",           "Arrest-Jail",
    "Start-Position", "End-Position",    "Phone-Write",   "Demonstrate",   "Be-Born",
    "Divorce",        "Convict",         "Sentence",      "Charge-Indict", "Fine",
    "Execute",        "Extradite",       "Acquit",        "Appeal",        "Pardon",
    "Release-Parole", "Trial-Hearing",   "Declare-Bankruptcy", "Merge-Org", "Start-Org",
    "End-Org",        "Transfer-Ownership", "Nominate"};

constexpr std::string_view kConsonants = "bdfgklmnprstvz";
constexpr std::string_view kVowels = "aeiou";
constexpr std::size_t kSyllables = 14 * 5;
constexpr std::size_t kMaxWords = kSyllables * kSyllables * kSyllables;

// Distinct ids give distinct pronounceable words of exactly three syllables.
std::string pseudo_word(std::size_t id) {
  std::string w;
  for (int i = 0; i < 3; ++i) {
    const std::size_t syl = id % kSyllables;
    id /= kSyllables;
    w += kConsonants[syl / kVowels.size()];
    w += kVowels[syl % kVowels.size()];
  }
  return w;
}

void validate(const SynthConfig& cfg) {
  auto prob_ok = [](double p) { return p >= 0.0 && p <= 1.0; };
  if (cfg.n_event_types == 0) throw ConfigError("synth: n_event_types must be >= 1");
  if (cfg.triggers_per_type == 0) throw ConfigError("synth: triggers_per_type must be >= 1");
  if (cfg.filler_vocab_size == 0) throw ConfigError("synth: filler_vocab_size must be >= 1");
  if (cfg.n_event_types * cfg.triggers_per_type + cfg.filler_vocab_size > kMaxWords) {
    throw ConfigError("synth: trigger and filler vocabularies do not fit in " + std::to_string(kMaxWords) +
                      " distinct words");
  }
  if (!(cfg.zipf_exponent >= 0.0)) throw ConfigError("synth: zipf_exponent must be >= 0");
  if (!prob_ok(cfg.multi_label_prob)) throw ConfigError("synth: multi_label_prob must lie in [0, 1]");
  if (!prob_ok(cfg.negative_prob)) throw ConfigError("synth: negative_prob must lie in [0, 1]");
  const auto [lo, hi] = cfg.sentence_len_range;
  if (lo == 0 || lo > hi) throw ConfigError("synth: sentence_len_range must satisfy 1 <= min <= max");
  if (cfg.multi_label_prob > 0.0 && cfg.n_event_types >= 2 && lo < 2) {
    throw ConfigError("synth: multi-label sentences need sentence_len_range min >= 2");
  }
  if (cfg.n_sentences == 0) throw ConfigError("synth: n_sentences must be >= 1");
  if (cfg.negative_name.empty()) throw ConfigError("synth: negative_name must be non-empty");
}

}  // namespace

namespace {

// Integer counts summing to `total`, proportional to `w` (largest remainder,
// lower index first on equal remainders).
std::vector<std::size_t> apportion(const std::vector<double>& w, std::size_t total) {
  std::vector<std::size_t> counts(w.size());
  std::vector<std::pair<double, std::size_t>> rem;
  std::size_t used = 0;
  for (std::size_t i = 0; i < w.size(); ++i) {
    const double exact = w[i] * static_cast<double>(total);
    counts[i] = static_cast<std::size_t>(std::floor(exact));
    used += counts[i];
    rem.emplace_back(exact - std::floor(exact), i);
  }
  std::stable_sort(rem.begin(), rem.end(), [](const auto& a, const auto& b) { return a.first > b.first; });
  for (std::size_t k = 0; used < total; ++k, ++used) counts[rem[k % rem.size()].second]++;
  return counts;
}

}  // namespace

std::vector<double> zipf_weights(std::size_t n, double exponent) {
  std::vector<double> w(n);
  double total = 0;
  for (std::size_t i = 0; i < n; ++i) total += (w[i] = std::pow(static_cast<double>(i + 1), -exponent));
  for (double& v : w) v /= total;
  return w;
}

SynthCorpus generate_synthetic(const SynthConfig& cfg) {
  validate(cfg);
  const std::size_t n = cfg.n_event_types;

  std::vector<EventType> inventory;
  for (std::size_t i = 0; i < n; ++i) {
    std::string name = i < std::size(kEventNames) ? kEventNames[i] : "Event" + std::to_string(i);
    if (name == cfg.negative_name) name += "-Event";
    inventory.push_back({std::move(name), false});
  }
  inventory.push_back({cfg.negative_name, true});

  SynthCorpus out{Dataset(inventory), {}, zipf_weights(n, cfg.zipf_exponent)};

  // Word ids are spread over the pseudo-word space and dealt out in shuffled
  // order: triggers first, then filler, so the two sets are disjoint.
  Rng rng(cfg.seed);
  const std::size_t vocab = n * cfg.triggers_per_type + cfg.filler_vocab_size;
  const std::size_t stride = kMaxWords / vocab;
  const std::size_t offset = rng.below(stride);
  std::vector<std::size_t> pool(vocab);
  for (std::size_t i = 0; i < vocab; ++i) pool[i] = i * stride + offset;
  rng.shuffle(pool);
  std::size_t next = 0;
  std::vector<std::vector<std::string>> triggers(n);
  for (std::size_t e = 0; e < n; ++e) {
    for (std::size_t k = 0; k < cfg.triggers_per_type; ++k) triggers[e].push_back(pseudo_word(pool[next++]));
    out.triggers[inventory[e].name] = triggers[e];
  }
  std::vector<std::string> filler;
  for (std::size_t k = 0; k < cfg.filler_vocab_size; ++k) filler.push_back(pseudo_word(pool[next++]));

  // Labels are dealt from shuffled urns holding Zipf-proportional counts
  // (largest-remainder rounding), each urn sized to the expected number of
  // instances. A draw that would repeat a sentence's first label goes back to
  // the front of the queue for a later sentence.
  const auto urn_size = static_cast<std::size_t>(std::ceil(
      static_cast<double>(cfg.n_sentences) * (1.0 - cfg.negative_prob) * (1.0 + (n >= 2 ? cfg.multi_label_prob : 0.0))));
  const std::vector<std::size_t> urn_counts = apportion(out.zipf_weights, std::max<std::size_t>(urn_size, n));
  const auto stocked = std::count_if(urn_counts.begin(), urn_counts.end(), [](std::size_t c) { return c > 0; });
  std::deque<std::size_t> queue;
  auto next_label = [&] {
    if (queue.empty()) {
      std::vector<std::size_t> urn;
      for (std::size_t e = 0; e < n; ++e) urn.insert(urn.end(), urn_counts[e], e);
      rng.shuffle(urn);
      queue.assign(urn.begin(), urn.end());
    }
    const std::size_t e = queue.front();
    queue.pop_front();
    return e;
  };

  const auto [lo, hi] = cfg.sentence_len_range;
  for (std::size_t s = 0; s < cfg.n_sentences; ++s) {
    const std::size_t len = lo + rng.below(hi - lo + 1);
    Sentence sent;
    sent.tokens.resize(len);
    for (std::string& tok : sent.tokens) tok = filler[rng.below(filler.size())];
    if (rng.uniform() < cfg.negative_prob) {
      out.data.add(std::move(sent));
      continue;
    }
    std::vector<std::size_t> events{next_label()};
    if (stocked >= 2 && rng.uniform() < cfg.multi_label_prob) {
      std::vector<std::size_t> held;
      std::size_t second = next_label();
      while (second == events[0]) {
        held.push_back(second);
        second = next_label();
      }
      queue.insert(queue.begin(), held.begin(), held.end());
      events.push_back(second);
    }
    // distinct slots for the planted triggers
    std::vector<std::size_t> slots(len);
    for (std::size_t i = 0; i < len; ++i) slots[i] = i;
    for (std::size_t i = 0; i < events.size(); ++i) {
      const std::size_t j = i + rng.below(len - i);
      std::swap(slots[i], slots[j]);
      const auto& pool = triggers[events[i]];
      sent.tokens[slots[i]] = pool[rng.below(pool.size())];
      sent.labels.push_back(inventory[events[i]].name);
    }
    out.data.add(std::move(sent));
  }
  return out;
}

void write_provenance(const SynthCorpus& c, const std::filesystem::path& path) {
  nlohmann::json j;
  j["triggers"] = c.triggers;
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write provenance '" + path.string() + "'");
  out << j.dump(2) << "\n";
}

std::map<std::string, std::vector<std::string>> load_provenance(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open provenance '" + path.string() + "'");
  nlohmann::json j;
  try {
    in >> j;
    return j.at("triggers").get<std::map<std::string, std::vector<std::string>>>();
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("provenance '" + path.string() + "': " + e.what());
  }
}

}  // namespace drc
