#include "drc/model.hpp"

#include "drc/error.hpp"

namespace drc {

const std::string& Model::negative() const {
  for (const EventType& e : inventory) {
    if (e.is_negative) return e.name;
  }
  throw ContractError("model inventory has no negative type");
}

Model create_model(const Dataset& train, const EncoderConfig& enc, const HeadConfig& head, double alpha,
                   double threshold, std::size_t min_word_freq, std::uint64_t seed) {
  enc.validate();
  Model m;
  m.encoder = enc;
  m.head = head;
  m.head.n_events = train.num_types();
  m.vocab = build_vocabulary(train, min_word_freq);
  m.inventory = train.inventory();
  m.s_sa = sorted_event_sequence(train);
  m.partition = partition_major_minor(m.s_sa, alpha, train.total_instances());
  m.threshold = threshold;
  Rng order_rng(derive_seed(seed, 1));
  m.s_init = random_event_order(train, order_rng);
  Rng init_rng(derive_seed(seed, 2));
  init_encoder_params(m.params, enc, m.vocab.size(), init_rng);
  init_head_params(m.params, m.head, enc.d_model, init_rng);
  return m;
}

std::vector<std::vector<double>> predict_batch(const Model& m, std::span<const Sentence> xs,
                                               std::span<const EventOrder> orders) {
  if (xs.size() != orders.size()) throw ContractError("predict_batch: one order per sentence required");
  std::vector<std::vector<double>> out;
  if (xs.empty()) return out;
  std::vector<EncodedInput> inputs;
  inputs.reserve(xs.size());
  for (std::size_t i = 0; i < xs.size(); ++i) inputs.push_back(build_input(xs[i], orders[i], m.vocab, m.encoder));
  ad::Tape tape;
  const ParamVars p = bind_params(tape, m.params, false);
  Rng unused(0);
  const BatchEncoding enc = encode_batch(p, m.encoder, inputs, false, unused);
  const Tensor& probs = head_forward(p, m.head, enc, inputs).value();
  for (std::size_t i = 0; i < xs.size(); ++i) {
    out.emplace_back(probs.data().begin() + i * probs.cols(), probs.data().begin() + (i + 1) * probs.cols());
  }
  return out;
}

std::vector<std::string> predict_labels(const Model& m, const Sentence& x, const EventOrder& order) {
  const auto probs = predict_batch(m, std::span<const Sentence>(&x, 1), std::span<const EventOrder>(&order, 1));
  std::vector<std::string> labels;
  for (std::size_t slot : decide_labels(probs[0], m.threshold, order.position_of(m.negative()))) {
    labels.push_back(order.sequence[slot]);
  }
  return labels;
}

void save_model(const Model& m, const std::filesystem::path& path) {
  nlohmann::json meta;
  meta["encoder"] = m.encoder.to_json();
  meta["head"] = m.head.to_json();
  meta["vocab"] = m.vocab.to_json();
  meta["inventory"] = nlohmann::json::array();
  for (const EventType& e : m.inventory) meta["inventory"].push_back({{"name", e.name}, {"negative", e.is_negative}});
  meta["s_init"] = m.s_init.sequence;
  meta["s_sa"] = nlohmann::json::array();
  for (const EventCount& e : m.s_sa.ordered) meta["s_sa"].push_back({e.name, e.count});
  meta["alpha"] = m.partition.alpha;
  meta["k"] = m.partition.k;
  meta["threshold"] = m.threshold;
  save_checkpoint(path, m.params, meta);
}

Model load_model(const std::filesystem::path& path) {
  Checkpoint ck = load_checkpoint(path);
  const nlohmann::json& meta = ck.meta;
  Model m;
  try {
    m.encoder = EncoderConfig::from_json(meta.at("encoder"));
    m.head = HeadConfig::from_json(meta.at("head"));
    m.vocab = Vocabulary::from_json(meta.at("vocab"));
    for (const auto& e : meta.at("inventory")) m.inventory.push_back({e.at("name"), e.at("negative")});
    m.s_init.sequence = meta.at("s_init").get<std::vector<std::string>>();
    for (const auto& e : meta.at("s_sa")) m.s_sa.ordered.push_back({e.at(0), e.at(1)});
    m.partition = partition_major_minor(m.s_sa, meta.at("alpha").get<double>());
    m.threshold = meta.at("threshold");
  } catch (const nlohmann::json::exception& e) {
    throw ParseError("checkpoint '" + path.string() + "' metadata: " + e.what());
  }
  if (m.partition.k != meta.at("k").get<std::size_t>()) {
    throw ParseError("checkpoint '" + path.string() + "': stored major/minor split does not match its counts");
  }
  m.params = std::move(ck.params);
  return m;
}

}  // namespace drc
