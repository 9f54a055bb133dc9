#include "drc/sweep.hpp"

#include <atomic>
#include <cmath>
#include <cstdio>
#include <exception>
#include <limits>
#include <mutex>
#include <thread>

#include "drc/error.hpp"
#include "drc/svg.hpp"

namespace drc {

nlohmann::json SweepResult::to_json() const {
  nlohmann::json j;
  j["q_grid"] = q_grid;
  j["r_grid"] = r_grid;
  j["cells"] = nlohmann::json::array();
  for (const SweepCell& c : cells) {
    nlohmann::json cj{{"q", c.q}, {"r", c.r}, {"skipped", c.skipped}, {"seed", c.seed}};
    if (c.skipped) {
      cj["reason"] = c.reason;
    } else {
      cj["dev_f1"] = c.dev_f1;
    }
    j["cells"].push_back(cj);
  }
  if (best) {
    j["best"] = {{"q", cells[*best].q}, {"r", cells[*best].r}, {"dev_f1", cells[*best].dev_f1}};
  } else {
    j["best"] = nullptr;
  }
  return j;
}

std::string SweepResult::to_svg() const {
  std::vector<std::string> rows, cols;
  for (double q : q_grid) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "q=%g", q);
    rows.emplace_back(buf);
  }
  for (std::size_t r : r_grid) cols.push_back("r=" + std::to_string(r));
  std::vector<std::vector<double>> values(q_grid.size(), std::vector<double>(r_grid.size()));
  for (std::size_t qi = 0; qi < q_grid.size(); ++qi) {
    for (std::size_t ri = 0; ri < r_grid.size(); ++ri) {
      const SweepCell& c = at(qi, ri);
      values[qi][ri] = c.skipped ? std::numeric_limits<double>::quiet_NaN() : c.dev_f1;
    }
  }
  return svg::heatmap("dev micro-F1 over (q, r)", rows, cols, values);
}

SweepResult sweep_qr(const Dataset& train_data, const Dataset& dev, const std::vector<double>& q_grid,
                     const std::vector<std::size_t>& r_grid, const Hyperparams& base, const EncoderConfig& enc,
                     const HeadConfig& head, std::size_t jobs) {
  if (q_grid.empty() || r_grid.empty()) throw ConfigError("sweep: q and r grids must be non-empty");
  if (jobs == 0) throw ConfigError("sweep: jobs must be >= 1");
  SweepResult res;
  res.q_grid = q_grid;
  res.r_grid = r_grid;
  for (double q : q_grid) {
    for (std::size_t r : r_grid) {
      SweepCell c;
      c.q = q;
      c.r = r;
      c.seed = base.seed;
      Hyperparams hp = base;
      hp.q = q;
      hp.r = r;
      hp.edm_enabled = true;
      if (r == 0) {
        c.skipped = true;
        c.reason = "r must be >= 1";
      } else {
        try {
          hp.validate();
          resolve_r(hp, train_data);
        } catch (const ConfigError& e) {
          c.skipped = true;
          c.reason = e.what();
        }
      }
      res.cells.push_back(c);
    }
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mu;
  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= res.cells.size()) return;
      SweepCell& c = res.cells[i];
      if (c.skipped) continue;
      try {
        Hyperparams hp = base;
        hp.q = c.q;
        hp.r = c.r;
        hp.edm_enabled = true;
        c.dev_f1 = train(train_data, dev, hp, enc, head).best_dev_f1;
      } catch (...) {
        std::lock_guard lock(failure_mu);
        if (!failure) failure = std::current_exception();
      }
    }
  };
  const std::size_t n_threads = std::min(jobs, res.cells.size());
  if (n_threads <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (std::size_t t = 0; t < n_threads; ++t) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  if (failure) std::rethrow_exception(failure);

  for (std::size_t i = 0; i < res.cells.size(); ++i) {
    if (res.cells[i].skipped) continue;
    if (!res.best || res.cells[i].dev_f1 > res.cells[*res.best].dev_f1) res.best = i;
  }
  return res;
}

}  // namespace drc
