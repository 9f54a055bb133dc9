#include <doctest.h>

#include <cmath>
#include <set>

#include "drc/error.hpp"
#include "drc/evaluation.hpp"
#include "helpers.hpp"

using namespace drc;
using testing_util::order_of;

namespace {

Model tiny_model(bool share = true) {
  EncoderConfig enc = testing_util::tiny_encoder();
  enc.share_event_positions = share;
  HeadConfig head;
  head.hidden = 16;
  Model m = create_model(testing_util::tiny_dataset(), enc, head, 0.5, 0.5, 1, 3);
  Rng rng(9);
  for (std::size_t i = 0; i < m.params.size(); ++i)
    for (std::size_t j = 0; j < m.params[i].size(); ++j) m.params[i][j] += 0.3 * rng.normal();
  return m;
}

std::vector<std::vector<std::string>> gold_labels(const Dataset& d) {
  std::vector<std::vector<std::string>> out;
  for (const Sentence& s : d.sentences()) out.push_back(s.labels);
  return out;
}

MajorMinorPartition partition_of(const Dataset& d) { return partition_major_minor(sorted_event_sequence(d), 0.5); }

}  // namespace

TEST_CASE("prf from counts") {
  const Prf a = Prf::from_counts(3, 1, 2);
  CHECK(a.p == doctest::Approx(0.75));
  CHECK(a.r == doctest::Approx(0.6));
  CHECK(a.f1 == doctest::Approx(2 * 0.75 * 0.6 / 1.35));
  const Prf z = Prf::from_counts(0, 0, 4);
  CHECK(z.p == 0.0);
  CHECK(z.r == 0.0);
  CHECK(z.f1 == 0.0);
}

TEST_CASE("perfect predictions score one") {
  const Dataset d = testing_util::tiny_dataset();
  const Metrics m = score_predictions(gold_labels(d), d, partition_of(d));
  CHECK(m.micro.f1 == 1.0);
  CHECK(m.micro.p == 1.0);
  CHECK(m.micro.r == 1.0);
  CHECK(m.major_f1 == 1.0);
  CHECK(m.minor_f1 == 1.0);
  CHECK(m.sentences == d.size());
  CHECK(m.per_event.count("None") == 0);
}

TEST_CASE("always negative has zero recall") {
  const Dataset d = testing_util::tiny_dataset();
  const std::vector<std::vector<std::string>> none(d.size(), {"None"});
  const Metrics m = score_predictions(none, d, partition_of(d));
  CHECK(m.micro.r == 0.0);
  CHECK(m.micro.f1 == 0.0);
  CHECK(m.micro.fn == 6);
}

TEST_CASE("micro scores agree with a direct pair count") {
  const Dataset d = testing_util::tiny_dataset();
  Rng rng(2);
  const std::vector<std::string> events{"Attack", "Die", "Meet", "Transport"};
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<std::vector<std::string>> pred;
    for (std::size_t i = 0; i < d.size(); ++i) {
      std::vector<std::string> p;
      for (const auto& e : events)
        if (rng.uniform() < 0.35) p.push_back(e);
      if (p.empty()) p.push_back("None");
      pred.push_back(p);
    }
    std::size_t tp = 0, fp = 0, fn = 0;
    for (std::size_t i = 0; i < d.size(); ++i) {
      const std::set<std::string> g(d.sentences()[i].labels.begin(), d.sentences()[i].labels.end());
      const std::set<std::string> p(pred[i].begin(), pred[i].end());
      for (const auto& e : events) {
        tp += g.count(e) && p.count(e);
        fp += !g.count(e) && p.count(e);
        fn += g.count(e) && !p.count(e);
      }
    }
    const Metrics m = score_predictions(pred, d, partition_of(d));
    CHECK(m.micro.tp == tp);
    CHECK(m.micro.fp == fp);
    CHECK(m.micro.fn == fn);
    std::size_t sum_tp = 0, sum_fp = 0, sum_fn = 0;
    for (const auto& [e, prf] : m.per_event) sum_tp += prf.tp, sum_fp += prf.fp, sum_fn += prf.fn;
    CHECK(sum_tp == tp);
    CHECK(sum_fp == fp);
    CHECK(sum_fn == fn);
  }
}

TEST_CASE("major and minor scores split by partition") {
  const Dataset d = testing_util::tiny_dataset();
  const MajorMinorPartition part = partition_of(d);
  REQUIRE(part.majors == std::vector<std::string>{"Attack"});
  std::vector<std::vector<std::string>> pred = gold_labels(d);
  pred[0] = {"None"};  // drops the minor Transport
  const Metrics m = score_predictions(pred, d, part);
  CHECK(m.major_f1 == 1.0);
  CHECK(m.minor_f1 == doctest::Approx(Prf::from_counts(2, 0, 1).f1));
}

TEST_CASE("bad inputs") {
  const Dataset d = testing_util::tiny_dataset();
  std::vector<std::vector<std::string>> pred = gold_labels(d);
  pred[1] = {"Explode"};
  CHECK_THROWS_AS(score_predictions(pred, d, partition_of(d)), ConfigError);
  pred.pop_back();
  CHECK_THROWS_AS(score_predictions(pred, d, partition_of(d)), ContractError);

  const Model m = tiny_model();
  Dataset other(testing_util::inventory({"Attack", "Die", "Meet", "Elect"}, "None"));
  other.add({{"x"}, {"Elect"}});
  CHECK_THROWS_AS(evaluate(m, other, m.s_init), ConfigError);
  CHECK_THROWS_AS(evaluate(m, d, order_of({"Attack", "Die", "Meet", "None"})), ConfigError);
}

TEST_CASE("rewired head under a permuted order gives the same probabilities") {
  const Model m = tiny_model(true);
  const Dataset d = testing_util::tiny_dataset();
  const std::vector<std::size_t> perm{4, 2, 0, 1, 3};
  EventOrder permuted;
  for (std::size_t j : perm) permuted.sequence.push_back(m.s_init.sequence[j]);
  Model rewired = m;
  permute_head_slots(rewired.params, rewired.head, rewired.encoder.d_model, perm);

  const std::vector<EventOrder> base_orders(d.size(), m.s_init);
  const std::vector<EventOrder> perm_orders(d.size(), permuted);
  const auto a = predict_batch(m, d.sentences(), base_orders);
  const auto b = predict_batch(rewired, d.sentences(), perm_orders);
  double worst = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    for (std::size_t j = 0; j < perm.size(); ++j) worst = std::max(worst, std::abs(b[i][j] - a[i][perm[j]]));
  CHECK(worst <= 1e-10);
  CHECK(evaluate(m, d, m.s_init).to_json() == evaluate(rewired, d, permuted).to_json());
}

TEST_CASE("shuffle test") {
  const Model m = tiny_model();
  const Dataset d = testing_util::tiny_dataset();
  const ShuffleReport r = shuffle_order_test(m, d, 8, 5);
  REQUIRE(r.orders.size() == 8);
  REQUIRE(r.metrics.size() == 8);
  double mean = 0;
  for (std::size_t i = 0; i < 8; ++i) {
    CHECK(!(r.orders[i] == m.s_init));
    std::vector<std::string> a = r.orders[i].sequence, b = m.s_init.sequence;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    CHECK(a == b);
    CHECK(r.metrics[i].to_json() == evaluate(m, d, r.orders[i]).to_json());
    mean += r.metrics[i].micro.f1;
  }
  CHECK(r.mean_f1 == doctest::Approx(mean / 8));

  const ShuffleReport again = shuffle_order_test(m, d, 8, 5);
  for (std::size_t i = 0; i < 8; ++i) CHECK(again.orders[i] == r.orders[i]);
  CHECK(again.mean_f1 == r.mean_f1);
}

TEST_CASE("evaluation is deterministic") {
  const Model m = tiny_model();
  const Dataset d = testing_util::tiny_dataset();
  CHECK(predict_dataset(m, d, m.s_init) == predict_dataset(m, d, m.s_init));
  CHECK(evaluate(m, d, m.s_init).to_json().dump() == evaluate(m, d, m.s_init).to_json().dump());
}
