#pragma once

#include <span>
#include <string>
#include <utility>
#include <vector>

#include "drc/autodiff.hpp"
#include "drc/gradcheck.hpp"
#include "helpers.hpp"

namespace testing_util {

using namespace drc;
using namespace drc::ad;

// Projects a tensor-valued op to a scalar with fixed random weights so every
// output coordinate contributes to the gradient.
inline Var project(Tape& t, Var y, std::uint64_t seed) {
  Rng rng(seed);
  const Tensor& v = y.value();
  const Var w = t.constant(random_matrix(v.rows(), v.cols(), rng));
  return reduce_sum(mul(y, w));
}

inline double check_at_points(const MultiScalarFn& f, const std::vector<std::vector<std::size_t>>& shapes,
                              double scale = 1.0, int points = 10) {
  double worst = 0;
  Rng rng(123);
  for (int p = 0; p < points; ++p) {
    std::vector<Tensor> xs;
    for (const auto& s : shapes) xs.push_back(random_matrix(s[0], s[1], rng, scale));
    worst = std::max(worst, finite_difference_check(f, xs, 1e-5).max_rel_error);
  }
  return worst;
}

// Worst relative error of each primitive over 10 random points.
inline std::vector<std::pair<std::string, double>> primitive_fd_errors() {
  std::vector<std::pair<std::string, double>> out;
  auto record = [&](std::string name, double err) { out.emplace_back(std::move(name), err); };
  auto unary = [](auto op) {
    return [op](Tape& t, std::span<const Var> v) { return project(t, op(v[0]), 77); };
  };
  record("matmul", check_at_points([](Tape& t, std::span<const Var> v) { return project(t, matmul(v[0], v[1]), 1); },
                        {{3, 4}, {4, 2}}));
  record("matmul_nt", check_at_points([](Tape& t, std::span<const Var> v) { return project(t, matmul_nt(v[0], v[1]), 1); },
                        {{3, 4}, {5, 4}}));
  record("add", check_at_points([](Tape& t, std::span<const Var> v) { return project(t, add(v[0], v[1]), 2); },
                        {{3, 4}, {3, 4}}));
  record("add_row", check_at_points([](Tape& t, std::span<const Var> v) { return project(t, add_row(v[0], v[1]), 2); },
                        {{3, 4}, {1, 4}}));
  record("mul", check_at_points([](Tape& t, std::span<const Var> v) { return project(t, mul(v[0], v[1]), 3); },
                        {{3, 4}, {3, 4}}));
  record("scale", check_at_points(unary([](Var a) { return scale(a, -1.7); }), {{3, 4}}));
  record("softmax_rows", check_at_points(unary([](Var a) { return softmax_rows(a); }), {{3, 5}}));
  record("gelu", check_at_points(unary([](Var a) { return gelu(a); }), {{3, 5}}));
  record("sigmoid", check_at_points(unary([](Var a) { return sigmoid(a); }), {{3, 5}}));
  record("reshape", check_at_points(unary([](Var a) { return reshape(a, 2, 6); }), {{3, 4}}));
  record("slice_rows", check_at_points(unary([](Var a) { return slice_rows(a, 1, 2); }), {{4, 3}}));
  record("element", check_at_points(unary([](Var a) { return element(a, 2, 1); }), {{4, 3}}));
  record("reduce_sum", check_at_points(unary([](Var a) { return reduce_sum(a); }), {{4, 3}}));
  record("layer_norm", check_at_points(
            [](Tape& t, std::span<const Var> v) { return project(t, layer_norm(v[0], v[1], v[2]), 4); },
            {{3, 6}, {1, 6}, {1, 6}}));
  record("gather_rows", check_at_points(
            [](Tape& t, std::span<const Var> v) {
              const int ids[] = {2, 0, 2, 3};
              return project(t, gather_rows(v[0], ids), 5);
            },
            {{4, 3}}));
  record("concat_rows", check_at_points(
            [](Tape& t, std::span<const Var> v) {
              const Var parts[] = {v[0], v[1]};
              return project(t, concat_rows(parts), 6);
            },
            {{2, 3}, {1, 3}}));
  record("dropout", check_at_points(
            [](Tape& t, std::span<const Var> v) {
              Rng mask(99);
              return project(t, dropout(v[0], 0.3, true, mask), 7);
            },
            {{4, 4}}));
  record("segment_attention", check_at_points(
            [](Tape& t, std::span<const Var> v) {
              const std::size_t offsets[] = {0, 3, 7};
              return project(t, segment_attention(v[0], v[1], v[2], offsets, 2), 8);
            },
            {{7, 4}, {7, 4}, {7, 4}}));
  record("bce", check_at_points(
            [](Tape& t, std::span<const Var> v) {
              const Tensor y = Tensor::matrix(2, 3, {1, 0, 0, 0, 1, 1});
              return bce(sigmoid(v[0]), y);
            },
            {{2, 3}}));
  return out;
}

}  // namespace testing_util
