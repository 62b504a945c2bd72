#pragma once

#include <cstdint>
#include <functional>
#include <initializer_list>
#include <span>
#include <vector>

#include "das/tensor.hpp"

namespace das {

/// Handle to a value recorded on a Tape.
struct Var {
  std::uint32_t id = 0;
};

/// Reverse-mode gradient tape over tensor-valued operations.
///
/// Nodes are appended in evaluation order, so replaying them backwards is a
/// valid topological order. A tape is single-threaded; independent tapes share
/// nothing and may run concurrently.
class Tape {
 public:
  /// Receives the gradient of the node's output and accumulates into parents.
  using Backward = std::function<void(Tape&, const Tensor& grad_out)>;

  Var input(Tensor value, bool requires_grad = true);
  Var constant(Tensor value) { return input(std::move(value), false); }

  /// Appends an operation result. `backward` is dropped when no parent
  /// requires a gradient.
  Var record(Tensor value, std::span<const Var> parents, Backward backward);
  Var record(Tensor value, std::initializer_list<Var> parents, Backward backward) {
    return record(std::move(value), std::span<const Var>(parents.begin(), parents.size()),
                  std::move(backward));
  }

  /// Handle the next recorded node will receive; lets a backward closure
  /// refer to its own output value.
  Var next() const { return Var{static_cast<std::uint32_t>(nodes_.size())}; }

  const Tensor& value(Var v) const { return nodes_.at(v.id).value; }
  bool requires_grad(Var v) const { return nodes_.at(v.id).requires_grad; }

  /// Gradient of the last backward() root with respect to `v`. Zero-filled
  /// when `v` did not contribute.
  const Tensor& grad(Var v);

  /// Accumulator used by backward closures; allocated on first use.
  Tensor& grad_accumulator(Var v);

  /// Seeds d(root)/d(root) = 1 and propagates to every recorded input.
  void backward(Var root);

  std::size_t size() const { return nodes_.size(); }

 private:
  struct Node {
    Tensor value;
    Tensor grad;
    bool requires_grad = false;
    Backward backward;
  };
  std::vector<Node> nodes_;
};

}  // namespace das
