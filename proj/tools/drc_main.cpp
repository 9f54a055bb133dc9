#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <json.hpp>

#include "drc/attribution.hpp"
#include "drc/config.hpp"
#include "drc/error.hpp"
#include "drc/evaluation.hpp"
#include "drc/sweep.hpp"
#include "drc/training.hpp"

#ifndef DRC_VERSION
#define DRC_VERSION "unknown"
#endif

namespace fs = std::filesystem;
using nlohmann::json;
using namespace drc;

namespace {

struct Run {
  std::string command;
  RunConfig cfg;
  json args = json::object();
  fs::path out;
};

void write_text(const fs::path& path, const std::string& text) {
  std::ofstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot write '" + path.string() + "'");
  f << text;
}

std::string read_text(const fs::path& path) {
  std::ifstream f(path, std::ios::binary);
  if (!f) throw IoError("cannot open '" + path.string() + "'");
  std::ostringstream ss;
  ss << f.rdbuf();
  return ss.str();
}

void write_json(const fs::path& path, const json& j) { write_text(path, j.dump(2) + "\n"); }

std::string absolute_or_empty(const std::string& p) { return p.empty() ? p : fs::absolute(p).string(); }

fs::path resolve_out(const RunConfig& cfg, const std::string& command) {
  if (!cfg.out.empty()) return cfg.out;
  const char* root = std::getenv("DRC_OUT_ROOT");
  return fs::path(root && *root ? root : "runs") / command;
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string join(const std::vector<std::string>& xs, const std::string& sep) {
  std::string s;
  for (std::size_t i = 0; i < xs.size(); ++i) s += (i ? sep : "") + xs[i];
  return s;
}

std::vector<std::string> split_csv(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    if (!item.empty()) out.push_back(item);
  }
  return out;
}

Dataset corpus_or(const Run& run, const std::function<Dataset()>& fallback) {
  const std::string p = run.args.value("corpus", "");
  return p.empty() ? fallback() : load_corpus(p);
}

std::string ckpt_path(const Run& run) {
  const std::string p = run.args.value("ckpt", "");
  if (p.empty()) throw ConfigError("--ckpt is required");
  return p;
}

void print_metrics(const std::string& label, const Metrics& m) {
  std::cout << label << ": micro P " << fmt(m.micro.p) << " R " << fmt(m.micro.r) << " F1 " << fmt(m.micro.f1)
            << " | major F1 " << fmt(m.major_f1) << " | minor F1 " << fmt(m.minor_f1) << "\n";
}

// ---- commands ------------------------------------------------------------------------

void cmd_generate(Run& run) {
  if (!run.cfg.train_path.empty()) throw ConfigError("generate works on the synthetic corpus; unset `train`");
  const Splits s = load_splits(run.cfg);
  write_corpus(s.train, run.out / "train.jsonl");
  write_corpus(s.dev, run.out / "dev.jsonl");
  write_corpus(s.test, run.out / "test.jsonl");
  write_provenance(SynthCorpus{s.train, s.triggers, {}}, run.out / "triggers.json");
  std::cout << "wrote " << s.train.size() << "/" << s.dev.size() << "/" << s.test.size()
            << " train/dev/test sentences to " << run.out.string() << "\n";
}

void cmd_stats(Run& run) {
  const Dataset d = corpus_or(run, [&] { return load_splits(run.cfg).train; });
  const SortedEventSeq s = sorted_event_sequence(d);
  const MajorMinorPartition p = partition_major_minor(s, run.cfg.hp.alpha);
  const double ir = imbalance_ratio(d);
  std::vector<std::string> ssa;
  json ssa_json = json::array();
  for (const EventCount& e : s.ordered) {
    ssa.push_back(e.name + ":" + std::to_string(e.count));
    ssa_json.push_back({e.name, e.count});
  }
  std::cout << "N = " << s.total() << "\n"
            << "n = " << d.num_types() << "\n"
            << "IR = " << fmt(ir, 2) << "\n"
            << "S_SA = " << join(ssa, " ") << "\n"
            << "k = " << p.k << " (alpha " << p.alpha << ")\n"
            << "E_Major = " << join(p.majors, " ") << "\n";
  write_json(run.out / "stats.json", {{"N", s.total()},
                                      {"n", d.num_types()},
                                      {"sentences", d.size()},
                                      {"IR", ir},
                                      {"S_SA", ssa_json},
                                      {"k", p.k},
                                      {"alpha", p.alpha},
                                      {"E_Major", p.majors},
                                      {"E_Minor", p.minors}});
}

void cmd_train(Run& run) {
  const Splits s = load_splits(run.cfg);
  const Hyperparams& hp = run.cfg.hp;
  std::cerr << (hp.edm_enabled ? "ED_DRC" : "ED_RC") << ": " << s.train.size() << " train sentences, "
            << s.train.num_types() << " types, seed " << hp.seed << "\n";
  const TrainResult res = train(s.train, s.dev, hp, run.cfg.encoder, run.cfg.head,
                                [](std::size_t epoch, double loss, double dev_f1) {
                                  std::cerr << "epoch " << epoch + 1 << " loss " << fmt(loss) << " dev F1 "
                                            << fmt(dev_f1) << "\n";
                                });
  save_model(res.model, run.out / "model.bin");
  write_text(run.out / "train_log.jsonl", res.log.to_jsonl());
  const std::size_t window = run.args.value("window", std::size_t{20});
  const LossCurves curves = split_loss_curves(res.log, window);
  write_json(run.out / "loss_curves.json", curves.to_json());
  write_text(run.out / "loss_curves.svg", curves.to_svg(hp.edm_enabled ? "ED_DRC" : "ED_RC"));

  json metrics;
  metrics["edm"] = hp.edm_enabled;
  metrics["r"] = hp.edm_enabled ? resolve_r(hp, s.train) : 0;
  metrics["best_epoch"] = res.best_epoch + 1;
  metrics["best_dev_f1"] = res.best_dev_f1;
  metrics["dev_f1"] = res.log.dev_f1;
  if (s.test.size()) {
    const Metrics t = evaluate(res.model, s.test, res.model.s_init);
    metrics["test"] = t.to_json();
    print_metrics("test", t);
  }
  write_json(run.out / "metrics.json", metrics);
}

void cmd_evaluate(Run& run) {
  const Model m = load_model(ckpt_path(run));
  const Dataset d = corpus_or(run, [&] { return load_splits(run.cfg).test; });
  const Metrics t = evaluate(m, d, m.s_init);
  print_metrics("fixed order", t);
  write_json(run.out / "metrics.json", t.to_json());
}

void cmd_shuffle(Run& run) {
  const Model m = load_model(ckpt_path(run));
  const Dataset d = corpus_or(run, [&] { return load_splits(run.cfg).test; });
  const std::size_t n = run.args.value("shuffles", std::size_t{5});
  const std::uint64_t seed = run.args.value("seed", run.cfg.hp.seed);
  const Metrics fixed = evaluate(m, d, m.s_init);
  const ShuffleReport r = shuffle_order_test(m, d, n, seed);
  print_metrics("fixed order", fixed);
  json shuffled = json::array();
  for (std::size_t i = 0; i < r.metrics.size(); ++i) {
    print_metrics("shuffle " + std::to_string(i + 1), r.metrics[i]);
    shuffled.push_back({{"order", r.orders[i].sequence}, {"metrics", r.metrics[i].to_json()}});
  }
  std::cout << "mean shuffled F1 " << fmt(r.mean_f1) << " (drop " << fmt(fixed.micro.f1 - r.mean_f1) << ")\n";
  write_json(run.out / "shuffle.json", {{"fixed", fixed.to_json()},
                                        {"shuffled", shuffled},
                                        {"mean_f1", r.mean_f1},
                                        {"drop", fixed.micro.f1 - r.mean_f1},
                                        {"seed", seed}});
}

void cmd_sweep(Run& run) {
  const Splits s = load_splits(run.cfg);
  const std::size_t jobs = run.args.value("jobs", run.cfg.sweep_jobs);
  const SweepResult r =
      sweep_qr(s.train, s.dev, run.cfg.sweep_q, run.cfg.sweep_r, run.cfg.hp, run.cfg.encoder, run.cfg.head, jobs);
  for (const SweepCell& c : r.cells) {
    std::cout << "q " << c.q << " r " << c.r << ": " << (c.skipped ? "skipped (" + c.reason + ")" : fmt(c.dev_f1))
              << "\n";
  }
  if (r.best) {
    const SweepCell& b = r.cells[*r.best];
    std::cout << "best q " << b.q << " r " << b.r << " dev F1 " << fmt(b.dev_f1) << "\n";
  }
  write_json(run.out / "sweep.json", r.to_json());
  write_text(run.out / "sweep.svg", r.to_svg());
}

void cmd_explain(Run& run) {
  const Model m = load_model(ckpt_path(run));
  Sentence x;
  const std::string text = run.args.value("text", "");
  if (!text.empty()) {
    std::istringstream ss(text);
    for (std::string w; ss >> w;) x.tokens.push_back(w);
    if (x.tokens.empty()) throw ConfigError("--text has no tokens");
  } else {
    const Dataset d = corpus_or(run, [&] { return load_splits(run.cfg).test; });
    const std::size_t idx = run.args.value("index", std::size_t{0});
    if (idx >= d.size()) throw ConfigError("--index " + std::to_string(idx) + " is out of range");
    x = d.sentences()[idx];
  }
  std::vector<std::string> events = split_csv(run.args.value("events", ""));
  if (events.empty()) {
    for (const EventType& e : m.inventory) events.push_back(e.name);
  }
  std::vector<SaliencyResult> rows;
  json out = json::array();
  for (const std::string& e : events) {
    rows.push_back(saliency(m, x, e, m.s_init));
    out.push_back(rows.back().to_json());
  }
  std::cout << render_heatmap_text(rows);
  const std::string json_path = run.args.value("json", (run.out / "saliency.json").string());
  const std::string svg_path = run.args.value("svg", (run.out / "saliency.svg").string());
  write_json(json_path, out);
  write_text(svg_path, render_heatmap_svg(rows));
}

void cmd_loss_curves(Run& run) {
  const std::string log_path = run.args.value("log", "");
  if (log_path.empty()) throw ConfigError("--log is required");
  const TrainLog log = TrainLog::from_jsonl(read_text(log_path));
  const std::size_t window = run.args.value("window", std::size_t{20});
  const std::size_t first = run.args.value("first_epochs", std::size_t{2});
  const LossCurves c = split_loss_curves(log, window);
  const std::size_t last_epoch = log.steps.back().epoch;
  const std::size_t early = first ? std::min(first - 1, last_epoch) : 0;
  json summary{{"last_epoch_major", mean_instance_loss(log, true, last_epoch, last_epoch)},
               {"last_epoch_minor", mean_instance_loss(log, false, last_epoch, last_epoch)},
               {"early_major", mean_instance_loss(log, true, 0, early)},
               {"early_minor", mean_instance_loss(log, false, 0, early)}};
  for (const auto& [k, v] : summary.items()) std::cout << k << " " << fmt(v.get<double>()) << "\n";
  json j = c.to_json();
  j["summary"] = summary;
  write_json(run.out / "loss_curves.json", j);
  write_text(run.out / "loss_curves.svg", c.to_svg(run.args.value("title", std::string("loss"))));
}

const std::map<std::string, std::function<void(Run&)>>& handlers() {
  static const std::map<std::string, std::function<void(Run&)>> h{
      {"generate", cmd_generate}, {"stats", cmd_stats},       {"train", cmd_train},
      {"evaluate", cmd_evaluate}, {"shuffle-test", cmd_shuffle}, {"sweep", cmd_sweep},
      {"explain", cmd_explain},   {"loss-curves", cmd_loss_curves}};
  return h;
}

void execute(Run& run) {
  run.cfg.validate();
  run.out = resolve_out(run.cfg, run.command);
  fs::create_directories(run.out);
  const auto start = std::chrono::steady_clock::now();
  write_text(run.out / "config.cfg", run.cfg.to_text());
  handlers().at(run.command)(run);
  const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  write_json(run.out / "manifest.json", {{"command", run.command},
                                         {"version", DRC_VERSION},
                                         {"seed", run.cfg.hp.seed},
                                         {"config", run.cfg.to_text()},
                                         {"args", run.args},
                                         {"wall_time_s", wall}});
}

Run from_manifest(const fs::path& path) {
  json m;
  try {
    m = json::parse(read_text(path));
  } catch (const json::exception& e) {
    throw ParseError("manifest '" + path.string() + "': " + e.what());
  }
  Run run;
  run.command = m.at("command").get<std::string>();
  if (!handlers().count(run.command)) throw ConfigError("manifest names unknown command '" + run.command + "'");
  run.cfg = parse_run_config(m.at("config").get<std::string>());
  run.args = m.value("args", json::object());
  return run;
}

struct Flags {
  std::string config;
  std::vector<std::string> sets;
  std::string out;
};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Event detection with event derangement: corpus tools, training, evaluation, attribution"};
  app.set_version_flag("--version", std::string(DRC_VERSION));
  app.require_subcommand(1);

  Flags flags;
  std::map<std::string, CLI::App*> subs;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", flags.config, "key = value config file")->check(CLI::ExistingFile);
    sub->add_option("--set", flags.sets, "override one config key (key=value), repeatable");
    sub->add_option("--out", flags.out, "output directory");
    subs[sub->get_name()] = sub;
  };

  std::string corpus, ckpt, text, events, json_out, svg_out, log_path, title, manifest;
  std::optional<bool> edm;
  std::optional<std::uint64_t> seed;
  std::size_t shuffles = 5, jobs = 0, index = 0, window = 20, first_epochs = 2;

  add_common(app.add_subcommand("generate", "write the synthetic corpus splits and trigger sidecar"));

  CLI::App* stats = app.add_subcommand("stats", "print N, n, IR, S_SA, k and E_Major");
  add_common(stats);
  stats->add_option("--corpus", corpus, "JSONL corpus (default: configured training split)");

  CLI::App* tr = app.add_subcommand("train", "train a detector");
  add_common(tr);
  tr->add_option("--edm", edm, "enable the event derangement module (ED_DRC) or not (ED_RC)");
  tr->add_option("--seed", seed, "training seed");
  tr->add_option("--window", window, "moving-average window for the loss curves");

  CLI::App* ev = app.add_subcommand("evaluate", "score a checkpoint under its fixed event order");
  add_common(ev);
  ev->add_option("--ckpt", ckpt)->required();
  ev->add_option("--corpus", corpus, "JSONL corpus (default: configured test split)");

  CLI::App* sh = app.add_subcommand("shuffle-test", "score a checkpoint under random event orders");
  add_common(sh);
  sh->add_option("--ckpt", ckpt)->required();
  sh->add_option("--corpus", corpus, "JSONL corpus (default: configured test split)");
  sh->add_option("--shuffles", shuffles, "number of random orders");
  sh->add_option("--seed", seed, "seed for the random orders");

  CLI::App* sw = app.add_subcommand("sweep", "grid search over q and r with EDM on");
  add_common(sw);
  sw->add_option("--jobs", jobs, "cells trained concurrently (default: sweep.jobs)");

  CLI::App* ex = app.add_subcommand("explain", "gradient x input saliency per event");
  add_common(ex);
  ex->add_option("--ckpt", ckpt)->required();
  ex->add_option("--text", text, "whitespace-tokenized sentence");
  ex->add_option("--corpus", corpus, "JSONL corpus to pick a sentence from (default: configured test split)");
  ex->add_option("--index", index, "sentence index in the corpus");
  ex->add_option("--events", events, "comma-separated event types (default: all)");
  ex->add_option("--json", json_out, "saliency JSON path");
  ex->add_option("--svg", svg_out, "heatmap SVG path");

  CLI::App* lc = app.add_subcommand("loss-curves", "major/minor loss curves from a training log");
  add_common(lc);
  lc->add_option("--log", log_path, "train_log.jsonl")->required()->check(CLI::ExistingFile);
  lc->add_option("--window", window, "moving-average window");
  lc->add_option("--first-epochs", first_epochs, "epochs counted as pre-convergence");
  lc->add_option("--title", title);

  CLI::App* rr = app.add_subcommand("rerun", "repeat a run from its manifest.json");
  rr->add_option("manifest", manifest)->required()->check(CLI::ExistingFile);
  rr->add_option("--out", flags.out, "output directory (required)")->required();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? 0 : 2;
  }

  try {
    Run run;
    if (rr->parsed()) {
      run = from_manifest(manifest);
      run.cfg.out = flags.out;
      execute(run);
      return 0;
    }
    CLI::App* sub = app.get_subcommands().front();
    run.command = sub->get_name();
    if (!flags.config.empty()) run.cfg = load_run_config(flags.config);
    for (const std::string& s : flags.sets) apply_override(run.cfg, s);
    if (!flags.out.empty()) run.cfg.out = flags.out;
    run.cfg.train_path = absolute_or_empty(run.cfg.train_path);
    run.cfg.dev_path = absolute_or_empty(run.cfg.dev_path);
    run.cfg.test_path = absolute_or_empty(run.cfg.test_path);

    if (edm) run.cfg.hp.edm_enabled = *edm;
    if (seed && run.command == "train") run.cfg.hp.seed = *seed;
    if (!corpus.empty()) run.args["corpus"] = fs::absolute(corpus).string();
    if (!ckpt.empty()) run.args["ckpt"] = fs::absolute(ckpt).string();
    if (run.command == "train" || run.command == "loss-curves") run.args["window"] = window;
    if (run.command == "shuffle-test") {
      run.args["shuffles"] = shuffles;
      if (seed) run.args["seed"] = *seed;
    }
    if (run.command == "sweep" && jobs) run.args["jobs"] = jobs;
    if (run.command == "explain") {
      if (!text.empty()) run.args["text"] = text;
      run.args["index"] = index;
      if (!events.empty()) run.args["events"] = events;
      if (!json_out.empty()) run.args["json"] = fs::absolute(json_out).string();
      if (!svg_out.empty()) run.args["svg"] = fs::absolute(svg_out).string();
    }
    if (run.command == "loss-curves") {
      run.args["log"] = fs::absolute(log_path).string();
      run.args["first_epochs"] = first_epochs;
      if (!title.empty()) run.args["title"] = title;
    }
    execute(run);
  } catch (const ConfigError& e) {
    std::cerr << "config error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
