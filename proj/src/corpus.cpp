#include "drc/corpus.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <set>
#include <sstream>

#include <json.hpp>

#include "drc/error.hpp"

namespace drc {

using nlohmann::json;

Dataset::Dataset(std::vector<EventType> inventory) : inventory_(std::move(inventory)) {
  std::size_t negatives = 0;
  for (std::size_t i = 0; i < inventory_.size(); ++i) {
    const EventType& e = inventory_[i];
    if (e.name.empty()) throw SchemaError("inventory contains an empty event name");
    if (!index_.emplace(e.name, i).second) throw SchemaError("duplicate event type '" + e.name + "'");
    if (e.is_negative) {
      ++negatives;
      negative_index_ = i;
    }
  }
  if (negatives != 1) {
    throw SchemaError("inventory must contain exactly one negative type, found " + std::to_string(negatives));
  }
}

std::optional<std::size_t> Dataset::index_of(const std::string& name) const {
  auto it = index_.find(name);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

void Dataset::add(Sentence s) {
  if (inventory_.empty()) throw SchemaError("dataset has no inventory");
  if (s.tokens.empty()) throw SchemaError("empty token list");
  std::sort(s.labels.begin(), s.labels.end());
  s.labels.erase(std::unique(s.labels.begin(), s.labels.end()), s.labels.end());
  if (s.labels.empty()) s.labels.push_back(negative());
  for (const std::string& l : s.labels) {
    if (!index_.contains(l)) throw SchemaError("label '" + l + "' is not in the inventory");
  }
  if (s.labels.size() > 1 && std::find(s.labels.begin(), s.labels.end(), negative()) != s.labels.end()) {
    throw SchemaError("negative label '" + negative() + "' combined with other events");
  }
  sentences_.push_back(std::move(s));
}

std::vector<std::size_t> Dataset::instance_counts() const {
  std::vector<std::size_t> counts(inventory_.size(), 0);
  for (const Sentence& s : sentences_) {
    for (const std::string& l : s.labels) ++counts[index_.at(l)];
  }
  return counts;
}

std::size_t Dataset::total_instances() const {
  std::size_t n = 0;
  for (const Sentence& s : sentences_) n += s.labels.size();
  return n;
}

Dataset Dataset::slice(std::size_t begin, std::size_t count) const {
  if (begin + count > sentences_.size()) throw DomainError("dataset slice out of range");
  Dataset out(inventory_);
  out.sentences_.assign(sentences_.begin() + begin, sentences_.begin() + begin + count);
  return out;
}

// ---- JSONL -------------------------------------------------------------------------

Dataset parse_corpus(const std::string& text) {
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  std::optional<Dataset> data;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    json obj;
    try {
      obj = json::parse(line);
    } catch (const json::parse_error& e) {
      throw ParseError("line " + std::to_string(line_no) + ": malformed JSON: " + e.what());
    }
    if (!obj.is_object()) throw ParseError("line " + std::to_string(line_no) + ": expected a JSON object");
    if (!data) {
      if (!obj.contains("inventory") || !obj.contains("negative")) {
        throw SchemaError("line " + std::to_string(line_no) +
                          ": missing header {\"inventory\": [...], \"negative\": \"...\"}");
      }
      const std::string neg = obj.at("negative").get<std::string>();
      std::vector<EventType> inv;
      bool has_neg = false;
      for (const auto& name : obj.at("inventory")) {
        const std::string n = name.get<std::string>();
        inv.push_back({n, n == neg});
        has_neg = has_neg || n == neg;
      }
      if (!has_neg) inv.push_back({neg, true});
      data.emplace(std::move(inv));
      continue;
    }
    if (!obj.contains("text") || !obj.at("text").is_array()) {
      throw ParseError("line " + std::to_string(line_no) + ": missing \"text\" array");
    }
    Sentence s;
    try {
      s.tokens = obj.at("text").get<std::vector<std::string>>();
      if (obj.contains("events")) s.labels = obj.at("events").get<std::vector<std::string>>();
    } catch (const json::exception& e) {
      throw ParseError("line " + std::to_string(line_no) + ": " + e.what());
    }
    if (s.tokens.empty()) throw ParseError("line " + std::to_string(line_no) + ": empty token list");
    try {
      data->add(std::move(s));
    } catch (const SchemaError& e) {
      throw SchemaError("line " + std::to_string(line_no) + ": " + e.what());
    }
  }
  if (!data) throw SchemaError("corpus is missing its inventory header line");
  if (data->size() == 0) throw SchemaError("corpus contains no sentences");
  return std::move(*data);
}

Dataset load_corpus(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open corpus '" + path.string() + "'");
  std::stringstream buf;
  buf << in.rdbuf();
  return parse_corpus(buf.str());
}

std::string corpus_to_jsonl(const Dataset& d) {
  std::string out;
  json header;
  header["inventory"] = json::array();
  for (const EventType& e : d.inventory()) header["inventory"].push_back(e.name);
  header["negative"] = d.negative();
  out += header.dump() + "\n";
  for (const Sentence& s : d.sentences()) {
    json line;
    line["text"] = s.tokens;
    if (s.labels.size() == 1 && s.labels[0] == d.negative()) {
      line["events"] = json::array();
    } else {
      line["events"] = s.labels;
    }
    out += line.dump() + "\n";
  }
  return out;
}

void write_corpus(const Dataset& d, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write corpus '" + path.string() + "'");
  out << corpus_to_jsonl(d);
}

// ---- imbalance statistics ------------------------------------------------------------

std::vector<std::string> SortedEventSeq::names() const {
  std::vector<std::string> out;
  for (const EventCount& e : ordered) out.push_back(e.name);
  return out;
}

std::size_t SortedEventSeq::total() const {
  std::size_t n = 0;
  for (const EventCount& e : ordered) n += e.count;
  return n;
}

SortedEventSeq sorted_event_sequence(const std::vector<EventCount>& counts) {
  SortedEventSeq s{counts};
  std::sort(s.ordered.begin(), s.ordered.end(), [](const EventCount& a, const EventCount& b) {
    if (a.count != b.count) return a.count > b.count;
    return a.name < b.name;
  });
  return s;
}

SortedEventSeq sorted_event_sequence(const Dataset& d) {
  const std::vector<std::size_t> counts = d.instance_counts();
  std::vector<EventCount> ec;
  for (std::size_t i = 0; i < counts.size(); ++i) ec.push_back({d.inventory()[i].name, counts[i]});
  return sorted_event_sequence(ec);
}

bool MajorMinorPartition::is_major(const std::string& name) const {
  return std::find(majors.begin(), majors.end(), name) != majors.end();
}

MajorMinorPartition partition_major_minor(const SortedEventSeq& s, double alpha, std::size_t total) {
  if (s.ordered.empty()) throw DomainError("partition_major_minor: empty event sequence");
  if (!(alpha > 0.0 && alpha < 1.0)) throw DomainError("partition_major_minor: alpha must lie in (0, 1)");
  const double target = alpha * static_cast<double>(total);
  std::size_t best_k = 1;
  double best_gap = 0;
  double cumulative = 0;
  for (std::size_t k = 1; k <= s.ordered.size(); ++k) {
    cumulative += static_cast<double>(s.ordered[k - 1].count);
    const double gap = std::abs(cumulative - target);
    // strict comparison keeps the smaller k on an exact midpoint
    if (k == 1 || gap < best_gap) {
      best_k = k;
      best_gap = gap;
    }
  }
  MajorMinorPartition p;
  p.k = best_k;
  p.alpha = alpha;
  for (std::size_t i = 0; i < s.ordered.size(); ++i) {
    (i < best_k ? p.majors : p.minors).push_back(s.ordered[i].name);
  }
  return p;
}

MajorMinorPartition partition_major_minor(const SortedEventSeq& s, double alpha) {
  return partition_major_minor(s, alpha, s.total());
}

double imbalance_ratio(const std::vector<std::size_t>& counts) {
  std::size_t mx = 0, mn = 0, nonzero = 0;
  for (std::size_t c : counts) {
    if (c == 0) continue;
    ++nonzero;
    mx = std::max(mx, c);
    mn = mn == 0 ? c : std::min(mn, c);
  }
  if (nonzero < 2) throw DomainError("imbalance_ratio: need at least two event types with instances");
  return static_cast<double>(mx) / static_cast<double>(mn);
}

double imbalance_ratio(const Dataset& d) { return imbalance_ratio(d.instance_counts()); }

}  // namespace drc
