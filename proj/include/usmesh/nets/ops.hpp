#pragma once

#include "usmesh/nets/autograd.hpp"

#include <vector>

namespace usmesh::nn {

enum class Activation { Linear, Relu, Sigmoid, HardSigmoid, Tanh };

/// Running statistics of a batch-normalization layer, shape (1, c, 1, 1),
/// owned by the caller.
template <typename Scalar>
struct BatchNormState {
  Tensor<Scalar>* mean;
  Tensor<Scalar>* var;
};

/// 'same'-padded stride-1 convolution with an odd square kernel.
/// weight: (out, in, k, k); bias: (out, 1, 1, 1) or null.
template <typename Scalar>
Var<Scalar> conv2d(const Var<Scalar>& x, const Var<Scalar>& weight, const Var<Scalar>& bias);

/// Per-channel 'same' convolution; weight: (c, 1, k, k); no bias.
template <typename Scalar>
Var<Scalar> depthwise_conv2d(const Var<Scalar>& x, const Var<Scalar>& weight);

/// Transposed convolution with 'same' padding, output (h*stride, w*stride).
/// weight: (in, out, k, k); bias: (out, 1, 1, 1).
template <typename Scalar>
Var<Scalar> conv_transpose2d(const Var<Scalar>& x, const Var<Scalar>& weight,
                             const Var<Scalar>& bias, int stride);

/// Training mode normalizes with batch statistics and updates `state`;
/// inference mode uses `state`.
template <typename Scalar>
Var<Scalar> batch_norm(const Var<Scalar>& x, const Var<Scalar>& gamma, const Var<Scalar>& beta,
                       BatchNormState<Scalar> state, bool training, Scalar momentum, Scalar eps);

template <typename Scalar>
Var<Scalar> activate(const Var<Scalar>& x, Activation act);

/// hard_sigmoid(x) = clamp(0.2 x + 0.5, 0, 1).
template <typename Scalar>
Scalar hard_sigmoid(Scalar x);

template <typename Scalar>
Var<Scalar> max_pool2(const Var<Scalar>& x);

template <typename Scalar>
Var<Scalar> concat_channels(const std::vector<Var<Scalar>>& parts);

template <typename Scalar>
Var<Scalar> add(const Var<Scalar>& a, const Var<Scalar>& b);

/// Elementwise product where `m` is either the same shape as `x`, a
/// single-channel spatial mask (n, 1, h, w), or per-channel gains (n, c, 1, 1).
template <typename Scalar>
Var<Scalar> multiply(const Var<Scalar>& x, const Var<Scalar>& m);

template <typename Scalar>
Var<Scalar> global_avg_pool(const Var<Scalar>& x);

/// Mean of equally shaped tensors.
template <typename Scalar>
Var<Scalar> average(const std::vector<Var<Scalar>>& parts);

}  // namespace usmesh::nn
