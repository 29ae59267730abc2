#pragma once

#include <functional>
#include <memory>
#include <vector>

#include "sadm/core/tensor.hpp"

namespace sadm::nn {

/// One value in a define-by-run computation graph.
struct Node {
  Tensor value;
  Tensor grad;  // allocated on first accumulation
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  /// Propagates `grad` of this node into the grads of `inputs`.
  std::function<void(Node&)> backward;

  Tensor& grad_buffer();
};

/// Handle to a graph node. Copies share the node.
class Var {
 public:
  Var() = default;
  explicit Var(std::shared_ptr<Node> node) : node_(std::move(node)) {}

  static Var constant(Tensor value);
  /// Leaf that accumulates a gradient.
  static Var leaf(Tensor value);

  bool defined() const { return node_ != nullptr; }
  const Tensor& value() const { return node_->value; }
  const Tensor& grad() const { return node_->grad; }
  const Shape& shape() const { return node_->value.shape(); }
  int dim(int axis) const { return node_->value.dim(axis); }
  bool requires_grad() const { return node_ && node_->requires_grad; }
  /// Scalar value of a single-element node.
  double item() const;

  Node* node() const { return node_.get(); }
  const std::shared_ptr<Node>& ptr() const { return node_; }

 private:
  std::shared_ptr<Node> node_;
};

/// Creates an op result. `backward` is dropped when no input requires a gradient.
Var make_result(Tensor value, std::vector<Var> inputs, std::function<void(Node&)> backward);

/// Reverse-mode sweep from a single-element root, seeding d(root)/d(root) = 1.
void backward(const Var& root);

/// Gradient accumulation target of input `i` of `self`, or nullptr when it needs none.
inline Tensor* input_grad(Node& self, std::size_t i) {
  Node& in = *self.inputs[i];
  return in.requires_grad ? &in.grad_buffer() : nullptr;
}

}  // namespace sadm::nn
