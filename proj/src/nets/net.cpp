#include "usmesh/nets/net.hpp"

#include "layers.hpp"
#include "usmesh/error.hpp"

#include <algorithm>
#include <map>
#include <sstream>

namespace usmesh::nn {

template <typename Scalar>
class Body {
 public:
  virtual ~Body() = default;
  virtual Var<Scalar> forward(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const = 0;
};

namespace {

int width(const NetSpec& spec, int level) { return spec.nf << level; }

std::string level_name(const char* prefix, int level) { return prefix + std::to_string(level); }

/// One resolution level's convolution stage for the U-Net family.
template <typename Scalar>
struct ConvStage {
  std::vector<ConvBnRelu<Scalar>> convs;
  RecurrentResidualBlock<Scalar> r2;
  bool recurrent = false;
  bool has_se = false;
  SqueezeExcite<Scalar> se;

  ConvStage(Registry<Scalar>& reg, const NetSpec& spec, const std::string& name, int in, int out) {
    if (spec.arch == Arch::R2UNet) {
      recurrent = true;
      r2 = RecurrentResidualBlock<Scalar>(reg, name, in, out, spec.nr, spec.nc);
    } else {
      convs.emplace_back(reg, name + ".conv1", in, out, 3);
      convs.emplace_back(reg, name + ".conv2", out, out, 3);
    }
    if (spec.arch == Arch::SEUNet) {
      has_se = true;
      se = SqueezeExcite<Scalar>(reg, name + ".se", out);
    }
  }

  Var<Scalar> operator()(Var<Scalar> x, const ForwardContext<Scalar>& ctx) const {
    if (recurrent) {
      x = r2(x, ctx);
    } else {
      for (const auto& c : convs) x = c(x, ctx);
    }
    return has_se ? se(x, ctx) : x;
  }
};

/// Basic, attention, recurrent-residual and squeeze-excitation U-Nets.
template <typename Scalar>
class UNetBody final : public Body<Scalar> {
 public:
  UNetBody(Registry<Scalar>& reg, const NetSpec& spec) : spec_(spec) {
    int ch = spec.in_channels;
    for (int l = 0; l < spec.depth; ++l) {
      enc_.emplace_back(reg, spec, level_name("enc", l), ch, width(spec, l));
      ch = width(spec, l);
    }
    for (int l = spec.depth - 2; l >= 0; --l) {
      const int f = width(spec, l);
      ups_.emplace_back(reg, level_name("up", l), ch, f, 2);
      if (spec.arch == Arch::AttUNet) gates_.emplace_back(reg, level_name("att", l), f, f, f);
      dec_.emplace_back(reg, spec, level_name("dec", l), 2 * f, f);
      ch = f;
    }
    head_ = Conv<Scalar>(reg, "head", ch, spec.out_channels, 1);
  }

  Var<Scalar> forward(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const override {
    std::vector<Var<Scalar>> skips;
    Var<Scalar> h = x;
    for (int l = 0; l < spec_.depth; ++l) {
      if (l > 0) h = max_pool2(h);
      h = enc_[static_cast<std::size_t>(l)](h, ctx);
      skips.push_back(h);
    }
    for (std::size_t i = 0; i < ups_.size(); ++i) {
      const int l = spec_.depth - 2 - static_cast<int>(i);
      auto up = ups_[i](h, ctx);
      auto skip = skips[static_cast<std::size_t>(l)];
      if (!gates_.empty()) skip = gates_[i](skip, up, ctx);
      h = dec_[i](concat_channels<Scalar>({up, skip}), ctx);
    }
    return activate(head_(h), spec_.ac);
  }

 private:
  NetSpec spec_;
  std::vector<ConvStage<Scalar>> enc_;
  std::vector<UpBlock<Scalar>> ups_;
  std::vector<AttentionGate<Scalar>> gates_;
  std::vector<ConvStage<Scalar>> dec_;
  Conv<Scalar> head_;
};

/// Nested U-Net: node (i, j) at depth i and column j sees every earlier node
/// of its row plus the upsampled node (i + 1, j - 1).
template <typename Scalar>
class UNetPPBody final : public Body<Scalar> {
 public:
  UNetPPBody(Registry<Scalar>& reg, const NetSpec& spec) : spec_(spec) {
    const int L = spec.depth;
    nodes_.resize(static_cast<std::size_t>(L));
    ups_.resize(static_cast<std::size_t>(L));
    int ch = spec.in_channels;
    for (int i = 0; i < L; ++i) {
      const int f = width(spec, i);
      nodes_[static_cast<std::size_t>(i)].push_back(make_node(reg, node_name(i, 0), ch, f, 3));
      ups_[static_cast<std::size_t>(i)].emplace_back();
      ch = f;
    }
    for (int j = 1; j < L; ++j) {
      for (int i = 0; i + j < L; ++i) {
        const int f = width(spec, i);
        const std::string name = node_name(i, j);
        ups_[static_cast<std::size_t>(i)].emplace_back(reg, name + ".up", width(spec, i + 1), f, 2);
        const int k = (i + j == L - 1) ? 3 : 1;
        nodes_[static_cast<std::size_t>(i)].push_back(make_node(reg, name, j * f + f, f, k));
      }
    }
    if (spec.deep_supervision) {
      for (int j = 1; j < L; ++j)
        heads_.emplace_back(reg, "head" + std::to_string(j), width(spec, 0), spec.out_channels, 1);
    } else {
      heads_.emplace_back(reg, "head", width(spec, 0), spec.out_channels, 1);
    }
  }

  Var<Scalar> forward(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const override {
    const int L = spec_.depth;
    std::vector<std::vector<Var<Scalar>>> out(static_cast<std::size_t>(L));
    Var<Scalar> h = x;
    for (int i = 0; i < L; ++i) {
      if (i > 0) h = max_pool2(h);
      h = run(nodes_[static_cast<std::size_t>(i)][0], h, ctx);
      out[static_cast<std::size_t>(i)].push_back(h);
    }
    for (int j = 1; j < L; ++j) {
      for (int i = 0; i + j < L; ++i) {
        const auto ui = static_cast<std::size_t>(i);
        auto parts = out[ui];
        parts.push_back(ups_[ui][static_cast<std::size_t>(j)](out[ui + 1][static_cast<std::size_t>(j - 1)], ctx));
        out[ui].push_back(run(nodes_[ui][static_cast<std::size_t>(j)], concat_channels(parts), ctx));
      }
    }
    if (!spec_.deep_supervision) return activate(heads_[0](out[0].back()), spec_.ac);
    std::vector<Var<Scalar>> logits;
    for (int j = 1; j < L; ++j) logits.push_back(heads_[static_cast<std::size_t>(j - 1)](out[0][static_cast<std::size_t>(j)]));
    return activate(average(logits), spec_.ac);
  }

 private:
  static std::string node_name(int i, int j) {
    return "node" + std::to_string(i) + "_" + std::to_string(j);
  }
  static std::vector<ConvBnRelu<Scalar>> make_node(Registry<Scalar>& reg, const std::string& name, int in,
                                                   int out, int k) {
    std::vector<ConvBnRelu<Scalar>> node;
    node.emplace_back(reg, name + ".conv1", in, out, k);
    node.emplace_back(reg, name + ".conv2", out, out, k);
    return node;
  }
  static Var<Scalar> run(const std::vector<ConvBnRelu<Scalar>>& node, Var<Scalar> x,
                         const ForwardContext<Scalar>& ctx) {
    for (const auto& c : node) x = c(x, ctx);
    return x;
  }

  NetSpec spec_;
  std::vector<std::vector<std::vector<ConvBnRelu<Scalar>>>> nodes_;
  std::vector<std::vector<UpBlock<Scalar>>> ups_;
  std::vector<Conv<Scalar>> heads_;
};

/// One W-Net branch: plain 3x3 convs at full resolution, depthwise-separable
/// convs below it, 3x3 stride-2 transposed convs on the way up.
template <typename Scalar>
class WBranch {
 public:
  WBranch(Registry<Scalar>& reg, const NetSpec& spec, const std::string& name, int in, int out)
      : depth_(spec.depth) {
    int ch = in;
    for (int l = 0; l < depth_; ++l) {
      enc_.push_back(stage(reg, name + "." + level_name("enc", l), l, ch, width(spec, l)));
      ch = width(spec, l);
    }
    for (int l = depth_ - 2; l >= 0; --l) {
      const int f = width(spec, l);
      ups_.emplace_back(reg, name + "." + level_name("up", l), ch, f, 3);
      dec_.push_back(stage(reg, name + "." + level_name("dec", l), l, 2 * f, f));
      ch = f;
    }
    head_ = Conv<Scalar>(reg, name + ".head", ch, out, 1);
  }

  /// Pre-activation output.
  Var<Scalar> operator()(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const {
    std::vector<Var<Scalar>> skips;
    Var<Scalar> h = x;
    for (int l = 0; l < depth_; ++l) {
      if (l > 0) h = max_pool2(h);
      h = enc_[static_cast<std::size_t>(l)](h, ctx);
      skips.push_back(h);
    }
    for (std::size_t i = 0; i < ups_.size(); ++i) {
      const auto l = static_cast<std::size_t>(depth_ - 2) - i;
      h = dec_[i](concat_channels<Scalar>({ups_[i](h, ctx), skips[l]}), ctx);
    }
    return head_(h);
  }

 private:
  struct Stage {
    std::vector<ConvBnRelu<Scalar>> plain;
    std::vector<SeparableConvBnRelu<Scalar>> separable;

    Var<Scalar> operator()(Var<Scalar> x, const ForwardContext<Scalar>& ctx) const {
      for (const auto& c : plain) x = c(x, ctx);
      for (const auto& c : separable) x = c(x, ctx);
      return x;
    }
  };

  static Stage stage(Registry<Scalar>& reg, const std::string& name, int level, int in, int out) {
    Stage s;
    if (level == 0) {
      s.plain.emplace_back(reg, name + ".conv1", in, out, 3);
      s.plain.emplace_back(reg, name + ".conv2", out, out, 3);
    } else {
      s.separable.emplace_back(reg, name + ".conv1", in, out, 3);
      s.separable.emplace_back(reg, name + ".conv2", out, out, 3);
    }
    return s;
  }

  int depth_;
  std::vector<Stage> enc_;
  std::vector<UpBlock<Scalar>> ups_;
  std::vector<Stage> dec_;
  Conv<Scalar> head_;
};

template <typename Scalar>
class WNetBody final : public Body<Scalar> {
 public:
  WNetBody(Registry<Scalar>& reg, const NetSpec& spec)
      : spec_(spec),
        first_(reg, spec, "b1", spec.in_channels, spec.out_channels),
        second_(reg, spec, "b2", spec.out_channels, spec.out_channels) {}

  Var<Scalar> forward(const Var<Scalar>& x, const ForwardContext<Scalar>& ctx) const override {
    return activate(second_(first_(x, ctx), ctx), spec_.ac);
  }

 private:
  NetSpec spec_;
  WBranch<Scalar> first_;
  WBranch<Scalar> second_;
};

const std::map<Arch, std::string>& arch_names() {
  static const std::map<Arch, std::string> names{
      {Arch::UNet, "unet"},       {Arch::AttUNet, "att_unet"}, {Arch::R2UNet, "r2_unet"},
      {Arch::SEUNet, "se_unet"}, {Arch::UNetPP, "unetpp"},    {Arch::WNet, "wnet"}};
  return names;
}

const std::map<Activation, std::string>& activation_names() {
  static const std::map<Activation, std::string> names{{Activation::Sigmoid, "sigmoid"},
                                                       {Activation::HardSigmoid, "hard_sigmoid"},
                                                       {Activation::Tanh, "tanh"},
                                                       {Activation::Linear, "linear"},
                                                       {Activation::Relu, "relu"}};
  return names;
}

int parse_int(const std::string& key, const std::string& value) {
  try {
    std::size_t pos = 0;
    const int v = std::stoi(value, &pos);
    if (pos != value.size()) throw std::invalid_argument(value);
    return v;
  } catch (const std::exception&) {
    throw ParseError("net spec: bad integer for '" + key + "': '" + value + "'");
  }
}

}  // namespace

std::string to_string(Arch arch) { return arch_names().at(arch); }

Arch parse_arch(const std::string& name) {
  for (const auto& [arch, n] : arch_names())
    if (n == name) return arch;
  throw ArgumentError("unknown architecture '" + name + "'");
}

std::string to_string(Activation act) { return activation_names().at(act); }

Activation parse_activation(const std::string& name) {
  for (const auto& [act, n] : activation_names())
    if (n == name && act != Activation::Relu) return act;
  throw ArgumentError("unknown output activation '" + name + "'");
}

std::string spec_string(const NetSpec& s) {
  std::ostringstream out;
  out << "arch=" << to_string(s.arch) << ";nf=" << s.nf << ";ac=" << to_string(s.ac) << ";h=" << s.height
      << ";w=" << s.width << ";in=" << s.in_channels << ";out=" << s.out_channels << ";nr=" << s.nr
      << ";nc=" << s.nc << ";depth=" << s.depth << ";ds=" << (s.deep_supervision ? 1 : 0);
  return out.str();
}

NetSpec parse_spec_string(const std::string& text) {
  NetSpec s;
  std::istringstream in(text);
  std::string item;
  while (std::getline(in, item, ';')) {
    const auto eq = item.find('=');
    if (eq == std::string::npos) throw ParseError("net spec: expected key=value, got '" + item + "'");
    const std::string key = item.substr(0, eq);
    const std::string value = item.substr(eq + 1);
    if (key == "arch") s.arch = parse_arch(value);
    else if (key == "ac") s.ac = parse_activation(value);
    else if (key == "nf") s.nf = parse_int(key, value);
    else if (key == "h") s.height = parse_int(key, value);
    else if (key == "w") s.width = parse_int(key, value);
    else if (key == "in") s.in_channels = parse_int(key, value);
    else if (key == "out") s.out_channels = parse_int(key, value);
    else if (key == "nr") s.nr = parse_int(key, value);
    else if (key == "nc") s.nc = parse_int(key, value);
    else if (key == "depth") s.depth = parse_int(key, value);
    else if (key == "ds") s.deep_supervision = parse_int(key, value) != 0;
    else throw ParseError("net spec: unknown key '" + key + "'");
  }
  return s;
}

void validate(const NetSpec& s) {
  if (s.nf < 1) throw ArgumentError("nf must be >= 1");
  if (s.depth < 2) throw ArgumentError("depth must be >= 2");
  if (s.nr < 1 || s.nc < 1) throw ArgumentError("nr and nc must be >= 1");
  if (s.in_channels < 1 || s.out_channels < 1) throw ArgumentError("channel counts must be >= 1");
  const int m = 1 << (s.depth - 1);
  if (s.height <= 0 || s.width <= 0 || s.height % m != 0 || s.width % m != 0)
    throw ShapeError("input plane " + std::to_string(s.height) + "x" + std::to_string(s.width) +
                     " is not divisible by " + std::to_string(m));
}

template <typename Scalar>
Net<Scalar>::Net(NetSpec spec, std::uint64_t seed) : spec_(spec) {
  validate(spec_);
  Registry<Scalar> reg(params_, buffers_, seed);
  switch (spec_.arch) {
    case Arch::UNet:
    case Arch::AttUNet:
    case Arch::R2UNet:
    case Arch::SEUNet: body_ = std::make_unique<UNetBody<Scalar>>(reg, spec_); break;
    case Arch::UNetPP: body_ = std::make_unique<UNetPPBody<Scalar>>(reg, spec_); break;
    case Arch::WNet: body_ = std::make_unique<WNetBody<Scalar>>(reg, spec_); break;
  }
}

template <typename Scalar>
Net<Scalar>::~Net() = default;
template <typename Scalar>
Net<Scalar>::Net(Net&&) noexcept = default;
template <typename Scalar>
Net<Scalar>& Net<Scalar>::operator=(Net&&) noexcept = default;

template <typename Scalar>
Var<Scalar> Net<Scalar>::forward(const Var<Scalar>& x, bool training, Probe<Scalar>* probe) {
  const Shape s = x->value.shape();
  if (s.n < 1 || s.c != spec_.in_channels || s.h != spec_.height || s.w != spec_.width)
    throw ShapeError("net expects (n," + std::to_string(spec_.in_channels) + "," +
                     std::to_string(spec_.height) + "," + std::to_string(spec_.width) + "), got " + s.str());
  ForwardContext<Scalar> ctx{training, bn_momentum, bn_eps, probe};
  return body_->forward(x, ctx);
}

template <typename Scalar>
Tensor<Scalar> Net<Scalar>::predict(const Tensor<Scalar>& x) {
  NoGradGuard guard;
  return forward(constant(x), false)->value;
}

template <typename Scalar>
std::int64_t Net<Scalar>::parameter_count() const {
  std::int64_t n = 0;
  for (const auto& p : params_) n += p.var->value.size();
  return n;
}

template <typename Scalar>
std::vector<LayerCount> Net<Scalar>::layer_report() const {
  std::vector<LayerCount> out;
  for (const auto& p : params_) {
    const std::string layer = p.name.substr(0, p.name.rfind('.'));
    if (out.empty() || out.back().layer != layer) out.push_back({layer, 0});
    out.back().params += p.var->value.size();
  }
  return out;
}

template <typename Scalar>
std::vector<Tensor<Scalar>> Net<Scalar>::snapshot() const {
  std::vector<Tensor<Scalar>> state;
  state.reserve(params_.size() + buffers_.size());
  for (const auto& p : params_) state.push_back(p.var->value);
  for (const auto& b : buffers_) state.push_back(b.var->value);
  return state;
}

template <typename Scalar>
void Net<Scalar>::restore(const std::vector<Tensor<Scalar>>& state) {
  if (state.size() != params_.size() + buffers_.size())
    throw IntegrityError("snapshot has " + std::to_string(state.size()) + " tensors, net has " +
                         std::to_string(params_.size() + buffers_.size()));
  std::size_t i = 0;
  for (auto* list : {&params_, &buffers_}) {
    for (auto& p : *list) {
      if (state[i].shape() != p.var->value.shape())
        throw IntegrityError("snapshot shape mismatch for " + p.name);
      p.var->value = state[i++];
    }
  }
}

template <typename Scalar>
void Net<Scalar>::zero_grad() {
  for (auto& p : params_) p.var->grad = Tensor<Scalar>();
}

template class Net<float>;
template class Net<double>;

}  // namespace usmesh::nn
