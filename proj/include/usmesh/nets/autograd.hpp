#pragma once

#include "usmesh/nets/tensor.hpp"

#include <functional>
#include <memory>
#include <vector>

namespace usmesh::nn {

/// A value in a dynamically recorded computation graph. Nodes created while
/// gradient recording is enabled keep their inputs alive and know how to push
/// their gradient back into them.
template <typename Scalar>
struct Node {
  Tensor<Scalar> value;
  Tensor<Scalar> grad;
  bool requires_grad = false;
  std::vector<std::shared_ptr<Node>> inputs;
  std::function<void(Node&)> backward;

  Tensor<Scalar>& grad_buffer() {
    if (grad.shape() != value.shape()) grad = Tensor<Scalar>(value.shape());
    return grad;
  }
  bool has_grad() const { return !grad.empty(); }
};

template <typename Scalar>
using Var = std::shared_ptr<Node<Scalar>>;

bool grad_enabled();

/// Disables graph recording for its lifetime (inference).
class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

template <typename Scalar>
Var<Scalar> constant(Tensor<Scalar> value) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  return node;
}

template <typename Scalar>
Var<Scalar> leaf(Tensor<Scalar> value) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  node->requires_grad = true;
  return node;
}

/// Wraps an op result. The backward closure is kept only when recording is
/// enabled and some input requires a gradient.
template <typename Scalar>
Var<Scalar> record(Tensor<Scalar> value, std::vector<Var<Scalar>> inputs,
                   std::function<void(Node<Scalar>&)> backward) {
  auto node = std::make_shared<Node<Scalar>>();
  node->value = std::move(value);
  if (!grad_enabled()) return node;
  bool needs = false;
  for (const auto& in : inputs) needs = needs || (in && in->requires_grad);
  if (needs) {
    node->requires_grad = true;
    node->inputs = std::move(inputs);
    node->backward = std::move(backward);
  }
  return node;
}

/// Seeds `root` with `seed` and propagates gradients to every reachable leaf.
template <typename Scalar>
void backward(const Var<Scalar>& root, const Tensor<Scalar>& seed);

extern template void backward(const Var<float>&, const Tensor<float>&);
extern template void backward(const Var<double>&, const Tensor<double>&);

}  // namespace usmesh::nn
