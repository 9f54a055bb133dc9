#include <doctest.h>

#include <cmath>

#include "drc/classifier.hpp"
#include "drc/error.hpp"
#include "helpers.hpp"

using namespace drc;
using testing_util::order_of;

namespace {

struct Fixture {
  Dataset data = testing_util::tiny_dataset();
  Vocabulary vocab = build_vocabulary(data);
  EncoderConfig cfg = testing_util::tiny_encoder();
  HeadConfig head;
  ParamStore params;

  explicit Fixture(bool share = true, std::uint64_t seed = 5) {
    cfg.share_event_positions = share;
    head.n_events = data.num_types();
    Rng rng(seed);
    init_encoder_params(params, cfg, vocab.size(), rng);
    init_head_params(params, head, cfg.d_model, rng);
    for (std::size_t i = 0; i < params.size(); ++i)
      for (std::size_t j = 0; j < params[i].size(); ++j) params[i][j] += 0.2 * rng.normal();
  }

  std::vector<double> probs(const Sentence& x, const std::vector<std::string>& order) const {
    return predict_probs(encode(build_input(x, order_of(order), vocab, cfg), params, cfg, false, 0), params, head);
  }
};

const std::vector<std::string> kOrder{"Attack", "Die", "Meet", "Transport", "None"};

void zero(Tensor& t) {
  for (std::size_t i = 0; i < t.size(); ++i) t[i] = 0;
}

}  // namespace

TEST_CASE("zero head gives one half everywhere") {
  Fixture f;
  for (const char* n : {"head.w1", "head.b1", "head.w2", "head.b2"}) zero(f.params.at(n));
  for (double p : f.probs(f.data.sentences()[0], kOrder)) CHECK(p == 0.5);
}

TEST_CASE("bias-only head saturates") {
  Fixture f;
  for (const char* n : {"head.w1", "head.b1", "head.w2"}) zero(f.params.at(n));
  Tensor& b2 = f.params.at("head.b2");
  for (std::size_t j = 0; j < b2.size(); ++j) b2[j] = 10.0;
  for (double p : f.probs(f.data.sentences()[0], kOrder)) CHECK(std::abs(p - 1.0) <= 1e-4);
}

TEST_CASE("block-permuted head follows permuted event slots") {
  Fixture f(true);
  const Sentence& x = f.data.sentences()[2];
  const std::vector<std::size_t> perm{2, 4, 0, 3, 1};
  std::vector<std::string> permuted;
  for (std::size_t j : perm) permuted.push_back(kOrder[j]);
  const std::vector<double> base = f.probs(x, kOrder);
  ParamStore rewired = f.params;
  permute_head_slots(rewired, f.head, f.cfg.d_model, perm);
  const std::vector<double> moved =
      predict_probs(encode(build_input(x, order_of(permuted), f.vocab, f.cfg), f.params, f.cfg, false, 0), rewired,
                    f.head);
  for (std::size_t j = 0; j < perm.size(); ++j) CHECK(std::abs(moved[j] - base[perm[j]]) <= 1e-10);

  // without rewiring the head the same inputs disagree
  const std::vector<double> plain = f.probs(x, permuted);
  double diff = 0;
  for (std::size_t j = 0; j < perm.size(); ++j) diff = std::max(diff, std::abs(plain[j] - base[perm[j]]));
  CHECK(diff > 1e-6);
}

TEST_CASE("cls input head") {
  Fixture f;
  HeadConfig h = f.head;
  h.cls_input = true;
  ParamStore p;
  Rng rng(1);
  init_encoder_params(p, f.cfg, f.vocab.size(), rng);
  init_head_params(p, h, f.cfg.d_model, rng);
  CHECK(p.at("head.w1").rows() == f.cfg.d_model);
  const auto probs =
      predict_probs(encode(build_input(f.data.sentences()[0], order_of(kOrder), f.vocab, f.cfg), p, f.cfg, false, 0),
                    p, h);
  CHECK(probs.size() == kOrder.size());
}

TEST_CASE("slot count mismatch is a config error") {
  Fixture f;
  HeadConfig wrong = f.head;
  wrong.n_events = 4;
  const HiddenStates h = encode(build_input(f.data.sentences()[0], order_of(kOrder), f.vocab, f.cfg), f.params,
                                f.cfg, false, 0);
  CHECK_THROWS_AS(predict_probs(h, f.params, wrong), ConfigError);
}

TEST_CASE("decide_labels") {
  // slots: Die, Transport, negative
  const double multi[] = {0.9, 0.7, 0.1};
  CHECK(decide_labels(multi, 0.5, 2) == std::vector<std::size_t>{0, 1});
  const double low[] = {0.2, 0.1, 0.4};
  CHECK(decide_labels(low, 0.5, 2) == std::vector<std::size_t>{2});
  const double neg_and_attack[] = {0.6, 0.6};
  CHECK(decide_labels(neg_and_attack, 0.5, 0) == std::vector<std::size_t>{1});
  const double only_neg[] = {0.2, 0.8};
  CHECK(decide_labels(only_neg, 0.5, 1) == std::vector<std::size_t>{1});
  const double low_event[] = {0.3, 0.45, 0.45};
  CHECK(decide_labels(low_event, 0.5, 0) == std::vector<std::size_t>{1});
}

TEST_CASE("bce_loss") {
  const double exact[] = {1.0, 0.0, 1.0, 0.0};
  CHECK(bce_loss(exact, exact) <= 4 * 1e-11);
  const double half[] = {0.5, 0.5, 0.5, 0.5};
  const double t[] = {1, 0, 0, 1};
  CHECK(bce_loss(half, t) == doctest::Approx(4 * std::log(2.0)).epsilon(1e-14));
  const double bad[] = {0.5, 0.5, 0.5, 0.3};
  CHECK_THROWS_AS(bce_loss(half, bad), ContractError);
  const double short_t[] = {1, 0};
  CHECK_THROWS_AS(bce_loss(half, short_t), ContractError);
}

TEST_CASE("gradient of bce through sigmoid at logit zero") {
  ad::Tape tape;
  const ad::Var z = tape.leaf(Tensor::matrix(1, 3, 0.0));
  const ad::Var loss = ad::bce(ad::sigmoid(z), Tensor::matrix(1, 3, 1.0));
  const Tensor g = tape.backward(loss).of(z);
  for (double v : g.values()) CHECK(v == doctest::Approx(-0.5).epsilon(1e-15));
}

TEST_CASE("head config round trip") {
  HeadConfig h{7, 32, true};
  const HeadConfig back = HeadConfig::from_json(h.to_json());
  CHECK(back.n_events == 7);
  CHECK(back.hidden == 32);
  CHECK(back.cls_input);
  CHECK(HeadConfig{7, 0, false}.hidden_width(64) == 768);
}
