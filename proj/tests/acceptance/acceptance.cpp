// Acceptance suite: one PASS/FAIL line per criterion, details in
// <workdir>/acceptance.json.
//
// usage: acceptance <workdir> [--epochs N] [--seeds N]

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "composite.hpp"
#include "drc/attribution.hpp"
#include "drc/config.hpp"
#include "drc/derangement.hpp"
#include "drc/evaluation.hpp"
#include "drc/training.hpp"
#include "oracles.hpp"
#include "primitive_checks.hpp"

#ifndef DRC_CLI_PATH
#define DRC_CLI_PATH "drc"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace drc;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

double median(std::vector<double> v) {
  std::sort(v.begin(), v.end());
  const std::size_t n = v.size();
  return n % 2 ? v[n / 2] : 0.5 * (v[n / 2 - 1] + v[n / 2]);
}

std::string sci(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.3g", v);
  return buf;
}

std::string f4(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.4f", v);
  return buf;
}

struct Report {
  json details = json::object();
  int failures = 0;

  void line(int id, bool pass, const std::string& what) {
    std::printf("criterion %2d: %s  %s\n", id, pass ? "PASS" : "FAIL", what.c_str());
    std::fflush(stdout);
    details["criterion_" + std::to_string(id)]["pass"] = pass;
    failures += !pass;
  }
};

// ---- 1 ---------------------------------------------------------------------------------

void derangement_oracle(Report& rep) {
  const auto start = Clock::now();
  const std::size_t expected_counts[] = {1, 2, 9, 44};
  bool ok = true;
  json d = json::array();
  Rng rng(derive_seed(2024, 1));
  for (std::size_t m = 2; m <= 5; ++m) {
    const auto all = enumerate_derangements(m);
    const auto brute = testing_util::brute_derangements(m);
    const std::size_t dm = all.size();
    const bool counts_ok = dm == expected_counts[m - 2] && all == brute;
    const std::size_t samples = 100 * dm * m;  // above the 10 * D(m) * m floor
    std::map<std::vector<std::size_t>, std::size_t> freq;
    bool members_ok = true;
    for (std::size_t i = 0; i < samples; ++i) {
      const auto p = sample_derangement(m, rng);
      members_ok &= std::binary_search(all.begin(), all.end(), p);
      freq[p]++;
    }
    const double expect = static_cast<double>(samples) / static_cast<double>(dm);
    double chi = 0;
    for (const auto& p : all) chi += std::pow(static_cast<double>(freq[p]) - expect, 2) / expect;
    const double pval = dm > 1 ? testing_util::chi_square_sf(chi, static_cast<double>(dm - 1)) : 1.0;
    const bool uniform_ok = dm == 1 ? freq.size() == 1 : pval > 0.001;
    ok &= counts_ok && members_ok && uniform_ok;
    d.push_back({{"m", m}, {"D", dm}, {"samples", samples}, {"chi2", chi}, {"p", pval}});
  }
  const double secs = seconds_since(start);
  ok &= secs < 10.0;
  rep.details["criterion_1"]["per_m"] = d;
  rep.details["criterion_1"]["seconds"] = secs;
  std::string ps;
  for (const auto& e : d) ps += " m=" + std::to_string(e["m"].get<int>()) + ":p=" + f4(e["p"].get<double>());
  rep.line(1, ok, "derangement counts 1,2,9,44 and uniformity;" + ps + " (" + f4(secs) + " s)");
}

// ---- 2 ---------------------------------------------------------------------------------

void algorithm_invariants(Report& rep, const Dataset& train_data) {
  const SortedEventSeq s_sa = sorted_event_sequence(train_data);
  const MajorMinorPartition part = partition_major_minor(s_sa, 0.5);
  Hyperparams hp;
  const std::size_t r = resolve_r(hp, train_data);
  const double q = 0.3;
  Rng rng(derive_seed(2024, 2));
  std::size_t major_calls = 0, major_fired = 0, minor_calls = 0, minor_fired = 0;
  bool perm_ok = true, fixed_ok = true, derange_ok = true;
  for (int call = 0; call < 10000; ++call) {
    const EventOrder init = random_event_order(train_data, rng);
    const Sentence& s = train_data.sentences()[rng.below(train_data.size())];
    const DerangeResult res = maybe_derange({s.labels, &part, &s_sa, &init}, EdmConfig{q, r, false}, rng);
    std::vector<std::string> a = res.order.sequence, b = init.sequence;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    perm_ok &= a == b;
    const std::vector<std::string> ed = build_derangement_set(s_sa, s.labels, r);
    for (std::size_t j = 0; j < init.size(); ++j) {
      const bool in_ed = std::find(ed.begin(), ed.end(), init.sequence[j]) != ed.end();
      if (!in_ed || !res.activated) fixed_ok &= res.order.sequence[j] == init.sequence[j];
      if (in_ed && res.activated) derange_ok &= res.order.sequence[j] != init.sequence[j];
    }
    bool major = false;
    for (const auto& l : s.labels) major = major || part.is_major(l);
    (major ? major_calls : minor_calls)++;
    (major ? major_fired : minor_fired) += res.activated;
  }
  const double rate = static_cast<double>(major_fired) / static_cast<double>(major_calls);
  const double sigma = std::sqrt(q * (1 - q) / static_cast<double>(major_calls));
  const bool rate_ok = std::abs(rate - q) <= 3 * sigma && minor_fired == 0;
  rep.details["criterion_2"] = {{"major_calls", major_calls}, {"major_rate", rate}, {"sigma", sigma},
                                {"minor_calls", minor_calls}, {"minor_fired", minor_fired}, {"r", r}};
  rep.line(2, perm_ok && fixed_ok && derange_ok && rate_ok,
           "10000 calls: permutation " + std::string(perm_ok ? "ok" : "BROKEN") + ", fixed slots " +
               (fixed_ok ? "ok" : "MOVED") + ", E_D fixed points " + (derange_ok ? "none" : "FOUND") +
               ", major rate " + f4(rate) + " (q " + f4(q) + " +- " + f4(3 * sigma) + "), minor fired " +
               std::to_string(minor_fired));
}

// ---- 3 ---------------------------------------------------------------------------------

void gradient_checks(Report& rep) {
  const auto start = Clock::now();
  double worst = 0;
  std::string worst_name;
  for (const auto& [name, err] : testing_util::primitive_fd_errors()) {
    if (err > worst) worst = err, worst_name = name;
  }
  const auto c = testing_util::check_composite(testing_util::make_composite(21));
  const double composite = c.rel.max_rel_error, zero_ad = c.zero_grad_ad, zero_fd = c.zero_grad_fd;
  const double secs = seconds_since(start);
  // reported only
  const auto shared = testing_util::check_composite(testing_util::make_composite(21, true));
  std::printf("  info: shared-position composite max rel %.3g at %s[%zu]\n", shared.rel.max_rel_error,
              shared.worst_name.c_str(), shared.rel.worst_index);
  const bool ok = worst <= 1e-4 && composite <= 1e-4 && zero_ad <= 1e-12 && zero_fd <= 1e-9 && secs < 120;
  rep.details["criterion_3"] = {{"primitive_worst", worst}, {"primitive_worst_name", worst_name},
                                {"composite", composite},   {"key_bias_ad", zero_ad},
                                {"key_bias_fd", zero_fd},   {"seconds", secs},
                                {"shared_composite_info", shared.rel.max_rel_error}};
  rep.line(3, ok,
           "primitives max rel " + sci(worst) + " (" + worst_name + "), composite " + sci(composite) +
               ", key-bias |grad| " + sci(zero_ad) + " (" + f4(secs) + " s)");
}

// ---- training runs ---------------------------------------------------------------------

struct RunOut {
  TrainResult res;
  Metrics test;
  double seconds = 0;
};

RunOut train_run(const Splits& s, Hyperparams hp, const EncoderConfig& enc, const std::string& label) {
  const auto start = Clock::now();
  RunOut out{train(s.train, s.dev, hp, enc), {}, 0};
  out.test = evaluate(out.res.model, s.test, out.res.model.s_init);
  out.seconds = seconds_since(start);
  std::printf("  [run] %-24s test F1 %s major %s minor %s best epoch %zu (%.0f s)\n", label.c_str(),
              f4(out.test.micro.f1).c_str(), f4(out.test.major_f1).c_str(), f4(out.test.minor_f1).c_str(),
              out.res.best_epoch + 1, out.seconds);
  std::fflush(stdout);
  return out;
}

json run_json(const RunOut& r) {
  return {{"test_f1", r.test.micro.f1},         {"major_f1", r.test.major_f1}, {"minor_f1", r.test.minor_f1},
          {"best_epoch", r.res.best_epoch + 1}, {"dev_f1", r.res.log.dev_f1},  {"seconds", r.seconds}};
}

// ---- 6b --------------------------------------------------------------------------------

double consistency_gap(const Model& m, const Dataset& test) {
  Rng rng(derive_seed(2024, 6));
  std::vector<std::size_t> perm(m.s_init.size());
  std::iota(perm.begin(), perm.end(), 0);
  rng.shuffle(perm);
  EventOrder permuted;
  for (std::size_t j : perm) permuted.sequence.push_back(m.s_init.sequence[j]);
  Model rewired = m;
  permute_head_slots(rewired.params, rewired.head, rewired.encoder.d_model, perm);
  const std::vector<EventOrder> a_orders(test.size(), m.s_init), b_orders(test.size(), permuted);
  const auto a = predict_batch(m, test.sentences(), a_orders);
  const auto b = predict_batch(rewired, test.sentences(), b_orders);
  double worst = 0;
  for (std::size_t i = 0; i < test.size(); ++i)
    for (std::size_t j = 0; j < perm.size(); ++j) worst = std::max(worst, std::abs(b[i][j] - a[i][perm[j]]));
  return worst;
}

// ---- 9 ---------------------------------------------------------------------------------

void saliency_fidelity(Report& rep, const Model& m, const Splits& s) {
  const auto preds = predict_dataset(m, s.test, m.s_init);
  std::size_t hits = 0, cases = 0;
  json misses = json::array();
  for (std::size_t i = 0; i < s.test.size(); ++i) {
    const Sentence& x = s.test.sentences()[i];
    if (x.labels == std::vector<std::string>{s.test.negative()}) continue;
    std::vector<std::string> a = preds[i], b = x.labels;
    std::sort(a.begin(), a.end());
    std::sort(b.begin(), b.end());
    if (a != b) continue;
    for (const std::string& e : x.labels) {
      const SaliencyResult r = saliency(m, x, e, m.s_init);
      const std::string& tok = r.tokens[r.argmax()];
      const auto& trig = s.triggers.at(e);
      const bool hit = std::find(trig.begin(), trig.end(), tok) != trig.end();
      hits += hit;
      ++cases;
      if (!hit && misses.size() < 10) misses.push_back({{"sentence", i}, {"event", e}, {"argmax", tok}});
    }
  }
  const double rate = cases ? static_cast<double>(hits) / static_cast<double>(cases) : 0.0;
  rep.details["criterion_9"] = {{"cases", cases}, {"hits", hits}, {"rate", rate}, {"sample_misses", misses}};
  rep.line(9, cases > 0 && rate >= 0.80,
           "argmax token is the planted trigger in " + std::to_string(hits) + "/" + std::to_string(cases) + " (" +
               f4(rate) + ", need >= 0.80)");
}

// ---- 10 --------------------------------------------------------------------------------

std::string read_file(const fs::path& p) {
  std::ifstream f(p, std::ios::binary);
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void manifest_rerun(Report& rep, const fs::path& work) {
  const fs::path dir = work / "determinism";
  fs::remove_all(dir);
  fs::create_directories(dir);
  std::ofstream(dir / "run.cfg") << "synth.n_train = 400\nsynth.n_dev = 80\nsynth.n_test = 80\ntrain.epochs = 2\n";
  const std::string cli = DRC_CLI_PATH;
  const std::string first = "\"" + cli + "\" train --config \"" + (dir / "run.cfg").string() + "\" --edm=true --out \"" +
                            (dir / "first").string() + "\" 2>/dev/null >/dev/null";
  const std::string again = "\"" + cli + "\" rerun \"" + (dir / "first" / "manifest.json").string() + "\" --out \"" +
                            (dir / "again").string() + "\" 2>/dev/null >/dev/null";
  const int rc1 = std::system(first.c_str());
  const int rc2 = rc1 == 0 ? std::system(again.c_str()) : -1;
  bool same = false, model_same = false;
  if (rc1 == 0 && rc2 == 0) {
    const std::string a = read_file(dir / "first" / "metrics.json");
    same = !a.empty() && a == read_file(dir / "again" / "metrics.json");
    model_same = read_file(dir / "first" / "model.bin") == read_file(dir / "again" / "model.bin");
  }
  rep.details["criterion_10"] = {{"train_exit", rc1}, {"rerun_exit", rc2}, {"metrics_equal", same},
                                 {"model_equal", model_same}};
  rep.line(10, same,
           std::string("rerun from manifest: metrics.json ") + (same ? "identical" : "DIFFERS") + ", model.bin " +
               (model_same ? "identical" : "differs"));
}

}  // namespace

int main(int argc, char** argv) {
  fs::path work = "acceptance_work";
  std::size_t epochs = 10, n_seeds = 5;
  for (int i = 1; i < argc; ++i) {
    const std::string a = argv[i];
    if (a == "--epochs" && i + 1 < argc) {
      epochs = std::stoul(argv[++i]);
    } else if (a == "--seeds" && i + 1 < argc) {
      n_seeds = std::stoul(argv[++i]);
    } else {
      work = a;
    }
  }
  fs::create_directories(work);
  const auto start = Clock::now();
  Report rep;

  derangement_oracle(rep);

  RunConfig cfg;  // standard corpus: 8 types + negative, zipf 1.5, seed 7, 2000/400/400
  const Splits s = load_splits(cfg);
  const double ir = imbalance_ratio(s.train);
  std::printf("standard corpus: %zu/%zu/%zu sentences, %zu types, IR %.2f\n", s.train.size(), s.dev.size(),
              s.test.size(), s.train.num_types(), ir);
  rep.details["corpus"] = {{"train", s.train.size()}, {"dev", s.dev.size()}, {"test", s.test.size()},
                           {"types", s.train.num_types()}, {"IR", ir}};

  algorithm_invariants(rep, s.train);
  gradient_checks(rep);

  Hyperparams base;
  base.epochs = epochs;
  const EncoderConfig enc;

  std::vector<RunOut> rc, drc_q1, drc_q02;
  for (std::size_t k = 1; k <= n_seeds; ++k) {
    Hyperparams h = base;
    h.seed = k;
    h.edm_enabled = false;
    rc.push_back(train_run(s, h, enc, "ED_RC seed " + std::to_string(k)));
    h.edm_enabled = true;
    h.q = 1.0;
    drc_q1.push_back(train_run(s, h, enc, "ED_DRC q=1.0 seed " + std::to_string(k)));
    h.q = 0.2;
    drc_q02.push_back(train_run(s, h, enc, "ED_DRC q=0.2 seed " + std::to_string(k)));
  }
  json runs = json::object();
  for (std::size_t k = 0; k < n_seeds; ++k) {
    runs["rc"].push_back(run_json(rc[k]));
    runs["drc_q1"].push_back(run_json(drc_q1[k]));
    runs["drc_q0.2"].push_back(run_json(drc_q02[k]));
  }
  rep.details["runs"] = runs;

  // 4
  {
    const RunOut& r = rc.front();
    const bool ok = ir >= 15 && r.test.micro.f1 >= 0.95 && epochs <= 20 && r.seconds < 600;
    rep.details["criterion_4"] = {{"test_f1", r.test.micro.f1}, {"epochs", epochs}, {"seconds", r.seconds}};
    rep.line(4, ok,
             "ED_RC test micro-F1 " + f4(r.test.micro.f1) + " after " + std::to_string(epochs) + " epochs in " +
                 f4(r.seconds) + " s (IR " + f4(ir) + ")");
  }

  // 5
  {
    const Model& m = rc.front().res.model;
    const double fixed = rc.front().test.micro.f1;
    const ShuffleReport sh = shuffle_order_test(m, s.test, 5, 3);
    std::vector<double> f;
    for (const Metrics& x : sh.metrics) f.push_back(x.micro.f1);
    rep.details["criterion_5"] = {{"fixed", fixed}, {"shuffled", f}, {"mean", sh.mean_f1}};
    rep.line(5, sh.mean_f1 <= fixed - 0.30,
             "fixed " + f4(fixed) + ", mean of 5 shuffles " + f4(sh.mean_f1) + " (drop " + f4(fixed - sh.mean_f1) +
                 ", need >= 0.30)");
  }

  // 6
  {
    EncoderConfig shared = enc;
    shared.share_event_positions = true;
    Hyperparams h = base;
    h.seed = 1;
    h.edm_enabled = false;
    const RunOut r = train_run(s, h, shared, "ED_RC_Same seed 1");
    const ShuffleReport sh = shuffle_order_test(r.res.model, s.test, 5, 3);
    const double gap = std::abs(r.test.micro.f1 - sh.mean_f1);
    const double consistency = consistency_gap(r.res.model, s.test);
    std::vector<double> f;
    for (const Metrics& x : sh.metrics) f.push_back(x.micro.f1);
    rep.details["criterion_6"] = {{"fixed", r.test.micro.f1}, {"shuffled", f},           {"mean", sh.mean_f1},
                                  {"gap", gap},               {"consistency", consistency}, {"run", run_json(r)}};
    rep.line(6, gap <= 0.02 && consistency <= 1e-10,
             "shared positions: fixed " + f4(r.test.micro.f1) + " vs shuffled mean " + f4(sh.mean_f1) + " (gap " +
                 f4(gap) + ", need <= 0.02); rewired-head consistency max diff " +
                 sci(consistency) + " (need <= 1e-10)");
  }

  // 7
  {
    std::vector<double> rc_major, drc_major, rc_minor, drc_minor;
    for (std::size_t k = 0; k < n_seeds; ++k) {
      const std::size_t last = epochs - 1, early = std::min<std::size_t>(1, last);
      rc_major.push_back(mean_instance_loss(rc[k].res.log, true, last, last));
      drc_major.push_back(mean_instance_loss(drc_q1[k].res.log, true, last, last));
      rc_minor.push_back(mean_instance_loss(rc[k].res.log, false, 0, early));
      drc_minor.push_back(mean_instance_loss(drc_q1[k].res.log, false, 0, early));
    }
    const double a = median(drc_major), b = median(rc_major), c = median(drc_minor), d = median(rc_minor);
    rep.details["criterion_7"] = {{"rc_major_last", rc_major},   {"drc_major_last", drc_major},
                                  {"rc_minor_early", rc_minor},  {"drc_minor_early", drc_minor},
                                  {"median_drc_major_last", a},  {"median_rc_major_last", b},
                                  {"median_drc_minor_early", c}, {"median_rc_minor_early", d}};
    rep.line(7, a < b && c >= d,
             "median last-epoch major loss DRC " + f4(a) + " vs RC " + f4(b) + " (need <); median first-2-epoch " +
                 "minor loss DRC " + f4(c) + " vs RC " + f4(d) + " (need >=)");
  }

  // 8
  {
    std::vector<double> rc_minor, drc_minor;
    for (std::size_t k = 0; k < n_seeds; ++k) {
      rc_minor.push_back(rc[k].test.minor_f1);
      drc_minor.push_back(drc_q02[k].test.minor_f1);
    }
    const double a = median(drc_minor), b = median(rc_minor);
    rep.details["criterion_8"] = {{"rc_minor_f1", rc_minor}, {"drc_minor_f1", drc_minor},
                                  {"median_drc", a},         {"median_rc", b}};
    rep.line(8, a >= b, "median minor-event F1 ED_DRC(q=0.2) " + f4(a) + " vs ED_RC " + f4(b) + " (need >=)");

    // balanced counterpart: reported, not asserted
    RunConfig bcfg;
    bcfg.synth.zipf_exponent = 0.0;
    const Splits bs = load_splits(bcfg);
    const double bir = imbalance_ratio(bs.train);
    std::vector<double> brc, bdrc;
    const std::size_t b_seeds = std::min<std::size_t>(3, n_seeds);
    for (std::size_t k = 1; k <= b_seeds; ++k) {
      Hyperparams h = base;
      h.epochs = std::max<std::size_t>(1, epochs * 6 / 10);
      h.seed = k;
      h.edm_enabled = false;
      brc.push_back(train_run(bs, h, enc, "balanced ED_RC seed " + std::to_string(k)).test.minor_f1);
      h.edm_enabled = true;
      bdrc.push_back(train_run(bs, h, enc, "balanced ED_DRC seed " + std::to_string(k)).test.minor_f1);
    }
    rep.details["balanced"] = {{"IR", bir}, {"rc_minor_f1", brc}, {"drc_minor_f1", bdrc}};
    std::printf("  info: balanced corpus (IR %.2f): median minor F1 ED_DRC %s vs ED_RC %s (documented only)\n", bir,
                f4(median(bdrc)).c_str(), f4(median(brc)).c_str());
  }

  saliency_fidelity(rep, drc_q02.front().res.model, s);
  manifest_rerun(rep, work);

  rep.details["seconds"] = seconds_since(start);
  rep.details["epochs"] = epochs;
  rep.details["seeds"] = n_seeds;
  std::ofstream(work / "acceptance.json") << rep.details.dump(2) << "\n";
  std::printf("%d criteria failed (%.0f s); details in %s\n", rep.failures, seconds_since(start),
              (work / "acceptance.json").string().c_str());
  return rep.failures ? 1 : 0;
}
