#pragma once

// Reverse-mode automatic differentiation over rank-2 tensors.
//
// A Tape is an append-only list of nodes. Every primitive evaluates eagerly,
// checks its result is finite, and records a backward closure that reads the
// saved activations it needs straight from the tape. Since nodes can only
// reference earlier nodes, insertion order is a topological order and
// backward() is a single reverse sweep. backward() does not mutate the tape,
// so calling it twice gives identical gradients.

#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "drc/rng.hpp"
#include "drc/tensor.hpp"

namespace drc::ad {

class Tape;
class Gradients;

struct Var {
  Tape* tape = nullptr;
  int id = -1;

  bool valid() const { return tape != nullptr && id >= 0; }
  const Tensor& value() const;
};

class Tape {
 public:
  using Backward = std::function<void(const Tape&, int self, Gradients&)>;

  Tape() = default;
  Tape(const Tape&) = delete;
  Tape& operator=(const Tape&) = delete;

  // Differentiable input (parameter, embedding, test point).
  Var leaf(Tensor value);
  // Non-differentiable input.
  Var constant(Tensor value);

  const Tensor& value(int id) const { return nodes_[id].value; }
  const Tensor& value(Var v) const { return nodes_[v.id].value; }
  bool requires_grad(int id) const { return nodes_[id].requires_grad; }
  const char* op_name(int id) const { return nodes_[id].op; }
  std::size_t size() const { return nodes_.size(); }

  // Gradient of a 1x1 loss with respect to every node that requires grad.
  Gradients backward(Var loss) const;

  // Used by primitives. Rejects non-finite results.
  Var record(const char* op, Tensor value, std::vector<int> inputs, Backward backward);

 private:
  struct Node {
    const char* op;
    Tensor value;
    std::vector<int> inputs;
    Backward backward;
    bool requires_grad;
  };

  std::vector<Node> nodes_;
};

class Gradients {
 public:
  explicit Gradients(const Tape& tape) : tape_(&tape), grads_(tape.size()) {}

  // Accumulator for node `id`, zero-initialized with the node's shape on first use.
  Tensor& at(int id);

  bool has(Var v) const { return !grads_[v.id].empty(); }
  bool has(int id) const { return !grads_[id].empty(); }
  // Gradient of `v`; zeros when nothing flowed into it.
  Tensor of(Var v) const;
  const Tensor& raw(int id) const { return grads_[id]; }

 private:
  const Tape* tape_;
  std::vector<Tensor> grads_;
};

// ---- primitives -----------------------------------------------------------

Var matmul(Var a, Var b);                   // a[m,k] * b[k,n]
Var matmul_nt(Var a, Var b);                // a[m,k] * b[n,k]^T
Var add(Var a, Var b);                      // same shape
Var add_row(Var a, Var row);                // a[m,n] + row[1,n] broadcast over rows
Var mul(Var a, Var b);                      // elementwise
Var scale(Var a, double s);
Var gather_rows(Var table, std::span<const int> ids);
Var softmax_rows(Var a);
Var layer_norm(Var a, Var gamma, Var beta, double eps = 1e-12);
Var gelu(Var a);                            // tanh approximation
Var sigmoid(Var a);
// Inverted dropout with an explicit mask drawn from `rng`. Identity when
// training is false or rate is 0 (no node is recorded then).
Var dropout(Var a, double rate, bool training, Rng& rng);
Var concat_rows(std::span<const Var> parts);
Var slice_rows(Var a, std::size_t begin, std::size_t count);
Var reshape(Var a, std::size_t rows, std::size_t cols);
Var element(Var a, std::size_t r, std::size_t c);  // 1x1
Var reduce_sum(Var a);                             // 1x1

// Multi-head scaled dot-product self-attention applied independently to each
// row segment [offsets[i], offsets[i+1]). Unmasked within a segment, no
// attention across segments. q, k, v are [T, d] with d divisible by heads.
Var segment_attention(Var q, Var k, Var v, std::span<const std::size_t> offsets,
                      std::size_t heads);

// Binary cross-entropy on probabilities: sum over columns, mean over rows.
// Probabilities are clamped to [1e-12, 1 - 1e-12]; the clamped value is also
// used for the gradient so saturated slots keep a learning signal.
Var bce(Var probs, const Tensor& targets);

inline constexpr double kProbClamp = 1e-12;

}  // namespace drc::ad
