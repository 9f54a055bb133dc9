#pragma once

#include <functional>
#include <span>
#include <vector>

#include "drc/autodiff.hpp"

namespace drc::ad {

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t worst_input = 0;  // which input tensor
  std::size_t worst_index = 0;  // flat coordinate within it
  std::size_t coordinates = 0;  // how many coordinates were compared
};

// Scalar function of one tensor, built on the given tape.
using ScalarFn = std::function<Var(Tape&, Var)>;
// Scalar function of several tensors.
using MultiScalarFn = std::function<Var(Tape&, std::span<const Var>)>;

// Central-difference oracle: for each coordinate i compares
// (f(x + eps e_i) - f(x - eps e_i)) / 2eps against the reverse-mode gradient and
// returns max |fd - ad| / (|fd| + |ad| + 1e-12). eps must lie in [1e-7, 1e-3].
GradCheckResult finite_difference_check(const ScalarFn& f, const Tensor& x, double eps);

// Same check over several inputs. When `max_coords_per_input` is non-zero only
// that many coordinates per input are probed, chosen by a seeded draw.
GradCheckResult finite_difference_check(const MultiScalarFn& f, std::span<const Tensor> xs, double eps,
                                        std::size_t max_coords_per_input = 0, std::uint64_t seed = 0);

}  // namespace drc::ad
