#pragma once

#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "drc/training.hpp"

namespace drc {

struct SweepCell {
  double q = 0.0;
  std::size_t r = 0;
  bool skipped = false;
  std::string reason;
  double dev_f1 = 0.0;
  std::uint64_t seed = 0;
};

struct SweepResult {
  std::vector<double> q_grid;
  std::vector<std::size_t> r_grid;
  std::vector<SweepCell> cells;  // row-major over (q, r)
  std::optional<std::size_t> best;

  const SweepCell& at(std::size_t qi, std::size_t ri) const { return cells[qi * r_grid.size() + ri]; }
  nlohmann::json to_json() const;
  std::string to_svg() const;
};

// Trains one model per (q, r) cell with EDM on and records best dev micro-F1.
// Cells with r above n - max|gt| are marked skipped. `jobs` bounds the number
// of cells trained concurrently; results do not depend on it.
SweepResult sweep_qr(const Dataset& train_data, const Dataset& dev, const std::vector<double>& q_grid,
                     const std::vector<std::size_t>& r_grid, const Hyperparams& base, const EncoderConfig& enc,
                     const HeadConfig& head = {}, std::size_t jobs = 1);

}  // namespace drc
