#pragma once

#include "usmesh/nets/net.hpp"

#include <cmath>
#include <random>
#include <string>
#include <vector>

namespace usmesh::nn {

/// Creates and names the trainable tensors of a net during construction.
template <typename Scalar>
class Registry {
 public:
  Registry(std::vector<NamedVar<Scalar>>& params, std::vector<NamedVar<Scalar>>& buffers,
           std::uint64_t seed)
      : params_(params), buffers_(buffers), rng_(seed) {}

  /// Glorot-uniform initialized parameter.
  Var<Scalar> glorot(const std::string& name, Shape shape, double fan_in, double fan_out) {
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    Tensor<Scalar> t(shape);
    for (Eigen::Index i = 0; i < t.size(); ++i) t.array()[i] = static_cast<Scalar>(dist(rng_));
    return add(name, std::move(t));
  }

  Var<Scalar> filled(const std::string& name, Shape shape, Scalar value) {
    return add(name, Tensor<Scalar>(shape, value));
  }

  Var<Scalar> buffer(const std::string& name, Shape shape, Scalar value) {
    auto v = constant(Tensor<Scalar>(shape, value));
    buffers_.push_back({name, v});
    return v;
  }

 private:
  Var<Scalar> add(const std::string& name, Tensor<Scalar> t) {
    auto v = leaf(std::move(t));
    params_.push_back({name, v});
    return v;
  }

  std::vector<NamedVar<Scalar>>& params_;
  std::vector<NamedVar<Scalar>>& buffers_;
  std::mt19937_64 rng_;
};

template <typename Scalar>
struct Conv {
  Var<Scalar> kernel;
  Var<Scalar> bias;

  Conv() = default;
  Conv(Registry<Scalar>& reg, const std::string& name, int in, int out, int k, bool with_bias = true) {
    kernel = reg.glorot(name + ".kernel", Shape{out, in, k, k}, in * k * k, out * k * k);
    if (with_bias) bias = reg.filled(name + ".bias", Shape{out, 1, 1, 1}, Scalar(0));
  }
  Var<Scalar> operator()(const Var<Scalar>& x) const { return conv2d(x, kernel, bias); }
};

template <typename Scalar>
struct BatchNorm {
  Var<Scalar> gamma, beta, moving_mean, moving_var;

  BatchNorm() = default;
  BatchNorm(Registry<Scalar>& reg, const std::string& name, int channels) {
    const Shape s{1, channels, 1, 1};
    gamma = reg.filled(name + ".gamma", s, Scalar(1));
    beta = reg.filled(name + ".beta", s, Scalar(0));
    moving_mean = reg.buffer(name + ".moving_mean", s, Scalar(0));
    moving_var = reg.buffer(name + ".moving_var", s, Scalar(1));
  }
  Var<Scalar> operator()(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const {
    return batch_norm(x, gamma, beta, BatchNormState<Scalar>{&moving_mean->value, &moving_var->value},
                      ctx.training, ctx.momentum, ctx.eps);
  }
};

template <typename Scalar>
struct ConvBnRelu {
  Conv<Scalar> conv;
  BatchNorm<Scalar> bn;

  ConvBnRelu() = default;
  ConvBnRelu(Registry<Scalar>& reg, const std::string& name, int in, int out, int k)
      : conv(reg, name, in, out, k), bn(reg, name + "_bn", out) {}
  Var<Scalar> operator()(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const {
    return activate(bn(conv(x), ctx), Activation::Relu);
  }
};

/// Depthwise 3x3 (no bias) followed by a biased pointwise 1x1, then BN + ReLU.
template <typename Scalar>
struct SeparableConvBnRelu {
  Var<Scalar> depthwise;
  Conv<Scalar> pointwise;
  BatchNorm<Scalar> bn;

  SeparableConvBnRelu() = default;
  SeparableConvBnRelu(Registry<Scalar>& reg, const std::string& name, int in, int out, int k) {
    depthwise = reg.glorot(name + "_dw.kernel", Shape{in, 1, k, k}, in * k * k, k * k);
    pointwise = Conv<Scalar>(reg, name, in, out, 1);
    bn = BatchNorm<Scalar>(reg, name + "_bn", out);
  }
  Var<Scalar> operator()(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const {
    return activate(bn(pointwise(depthwise_conv2d(x, depthwise)), ctx), Activation::Relu);
  }
};

/// Stride-2 transposed convolution, BN, ReLU.
template <typename Scalar>
struct UpBlock {
  Var<Scalar> kernel, bias;
  BatchNorm<Scalar> bn;

  UpBlock() = default;
  UpBlock(Registry<Scalar>& reg, const std::string& name, int in, int out, int k) {
    kernel = reg.glorot(name + ".kernel", Shape{in, out, k, k}, out * k * k, in * k * k);
    bias = reg.filled(name + ".bias", Shape{out, 1, 1, 1}, Scalar(0));
    bn = BatchNorm<Scalar>(reg, name + "_bn", out);
  }
  Var<Scalar> operator()(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const {
    return activate(bn(conv_transpose2d(x, kernel, bias, 2), ctx), Activation::Relu);
  }
};

/// Global pool, bias-free bottleneck at half width, ReLU, dense back, sigmoid,
/// channel-wise gain.
template <typename Scalar>
struct SqueezeExcite {
  Conv<Scalar> squeeze;
  Conv<Scalar> excite;

  SqueezeExcite() = default;
  SqueezeExcite(Registry<Scalar>& reg, const std::string& name, int channels) {
    const int hidden = std::max(1, channels / 2);
    squeeze = Conv<Scalar>(reg, name + "_squeeze", channels, hidden, 1, false);
    excite = Conv<Scalar>(reg, name + "_excite", hidden, channels, 1);
  }
  Var<Scalar> operator()(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const {
    auto gains = activate(excite(activate(squeeze(global_avg_pool(x)), Activation::Relu)),
                          Activation::Sigmoid);
    if (ctx.probe) ctx.probe->se_gains.push_back(gains->value);
    return multiply(x, gains);
  }
};

/// Additive attention: the decoder signal gates the encoder skip tensor.
template <typename Scalar>
struct AttentionGate {
  Conv<Scalar> wx, wg, psi;
  BatchNorm<Scalar> bx, bg;

  AttentionGate() = default;
  AttentionGate(Registry<Scalar>& reg, const std::string& name, int skip_channels, int gate_channels,
                int inter) {
    wx = Conv<Scalar>(reg, name + ".wx", skip_channels, inter, 1);
    bx = BatchNorm<Scalar>(reg, name + ".wx_bn", inter);
    wg = Conv<Scalar>(reg, name + ".wg", gate_channels, inter, 1);
    bg = BatchNorm<Scalar>(reg, name + ".wg_bn", inter);
    psi = Conv<Scalar>(reg, name + ".psi", inter, 1, 1);
  }
  Var<Scalar> operator()(const Var<Scalar>& skip, const Var<Scalar>& gate,
                         const ForwardContext<Scalar>& ctx) const {
    auto a = activate(add(bx(wx(skip), ctx), bg(wg(gate), ctx)), Activation::Relu);
    auto mask = activate(psi(a), Activation::Sigmoid);
    if (ctx.probe) ctx.probe->attention_masks.push_back(mask->value);
    return multiply(skip, mask);
  }
};

/// Entry conv to the block width, NC-1 recurrent units (one shared conv
/// applied NR times, re-fed with the unit input), residual add.
template <typename Scalar>
struct RecurrentResidualBlock {
  ConvBnRelu<Scalar> entry;
  std::vector<ConvBnRelu<Scalar>> units;
  int nr = 2;

  RecurrentResidualBlock() = default;
  RecurrentResidualBlock(Registry<Scalar>& reg, const std::string& name, int in, int out, int nr_,
                         int nc)
      : entry(reg, name + ".entry", in, out, 3), nr(nr_) {
    for (int u = 1; u < nc; ++u) units.emplace_back(reg, name + ".rcl" + std::to_string(u), out, out, 3);
  }
  Var<Scalar> operator()(const Var<Scalar>& in, const ForwardContext<Scalar>& ctx) const {
    auto x = entry(in, ctx);
    auto s = x;
    for (const auto& unit : units) {
      const auto unit_in = s;
      s = unit(unit_in, ctx);
      for (int t = 1; t < nr; ++t) s = unit(add(unit_in, s), ctx);
    }
    return units.empty() ? x : add(x, s);
  }
};

}  // namespace usmesh::nn
