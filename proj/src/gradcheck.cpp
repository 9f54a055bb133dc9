#include "drc/gradcheck.hpp"

#include <cmath>
#include <numeric>
#include <string>

#include "drc/error.hpp"
#include "drc/rng.hpp"

namespace drc::ad {

namespace {

double evaluate(const MultiScalarFn& f, std::span<const Tensor> xs) {
  Tape tape;
  std::vector<Var> vars;
  vars.reserve(xs.size());
  for (const Tensor& x : xs) vars.push_back(tape.constant(x));
  const double y = f(tape, vars).value().item();
  if (!std::isfinite(y)) throw NumericError("finite_difference_check: non-finite function value");
  return y;
}

}  // namespace

GradCheckResult finite_difference_check(const ScalarFn& f, const Tensor& x, double eps) {
  MultiScalarFn g = [&f](Tape& t, std::span<const Var> v) { return f(t, v[0]); };
  return finite_difference_check(g, std::span<const Tensor>(&x, 1), eps);
}

GradCheckResult finite_difference_check(const MultiScalarFn& f, std::span<const Tensor> xs, double eps,
                                        std::size_t max_coords_per_input, std::uint64_t seed) {
  if (!(eps >= 1e-7 && eps <= 1e-3)) {
    throw DomainError("finite_difference_check: eps " + std::to_string(eps) + " outside [1e-7, 1e-3]");
  }
  std::vector<Tensor> analytic;
  {
    Tape tape;
    std::vector<Var> vars;
    for (const Tensor& x : xs) vars.push_back(tape.leaf(x));
    const Var y = f(tape, vars);
    const Gradients grads = tape.backward(y);
    for (const Var& v : vars) analytic.push_back(grads.of(v));
  }

  GradCheckResult res;
  std::vector<Tensor> probe(xs.begin(), xs.end());
  Rng rng(seed);
  for (std::size_t t = 0; t < xs.size(); ++t) {
    std::vector<std::size_t> coords(xs[t].size());
    std::iota(coords.begin(), coords.end(), 0);
    if (max_coords_per_input != 0 && coords.size() > max_coords_per_input) {
      rng.shuffle(coords);
      coords.resize(max_coords_per_input);
    }
    for (std::size_t i : coords) {
      const double orig = probe[t][i];
      probe[t][i] = orig + eps;
      const double up = evaluate(f, probe);
      probe[t][i] = orig - eps;
      const double down = evaluate(f, probe);
      probe[t][i] = orig;
      const double fd = (up - down) / (2.0 * eps);
      const double ad = analytic[t][i];
      const double rel = std::abs(fd - ad) / (std::abs(fd) + std::abs(ad) + 1e-12);
      ++res.coordinates;
      if (rel > res.max_rel_error) {
        res.max_rel_error = rel;
        res.worst_input = t;
        res.worst_index = i;
      }
    }
  }
  return res;
}

}  // namespace drc::ad
