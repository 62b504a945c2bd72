#include "das/tape.hpp"

#include "das/error.hpp"

namespace das {

Var Tape::input(Tensor value, bool requires_grad) {
  nodes_.push_back(Node{std::move(value), Tensor(), requires_grad, nullptr});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Var Tape::record(Tensor value, std::span<const Var> parents, Backward backward) {
  bool needs_grad = false;
  for (Var p : parents) needs_grad = needs_grad || nodes_.at(p.id).requires_grad;
  nodes_.push_back(Node{std::move(value), Tensor(), needs_grad,
                        needs_grad ? std::move(backward) : nullptr});
  return Var{static_cast<std::uint32_t>(nodes_.size() - 1)};
}

Tensor& Tape::grad_accumulator(Var v) {
  Node& n = nodes_.at(v.id);
  if (n.grad.size() != n.value.size() || !n.grad.same_shape(n.value)) {
    n.grad = Tensor(n.value.shape(), 0.0);
  }
  return n.grad;
}

const Tensor& Tape::grad(Var v) { return grad_accumulator(v); }

void Tape::backward(Var root) {
  if (value(root).size() != 1) {
    throw ShapeError("backward() needs a scalar root, got " + shape_string(value(root).shape()));
  }
  for (Node& n : nodes_) n.grad = Tensor();
  grad_accumulator(root)[0] = 1.0;
  for (std::size_t i = root.id + 1; i-- > 0;) {
    Node& n = nodes_[i];
    if (!n.backward || n.grad.size() == 0) continue;
    // The closure only writes into parent nodes, which precede i.
    n.backward(*this, n.grad);
  }
}

}  // namespace das
