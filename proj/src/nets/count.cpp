#include "usmesh/nets/net.hpp"

#include <numeric>

namespace usmesh::nn {
namespace {

using Count = std::int64_t;

/// Appends closed-form layer sizes; independent of the layer classes so it can
/// serve as a check on them.
class Tally {
 public:
  explicit Tally(std::vector<LayerCount>& out) : out_(out) {}

  void conv(const std::string& name, Count in, Count out, Count k, bool bias = true) {
    push(name, k * k * in * out + (bias ? out : 0));
  }
  void bn(const std::string& name, Count c) { push(name, 2 * c); }
  void conv_bn(const std::string& name, Count in, Count out, Count k) {
    conv(name, in, out, k);
    bn(name + "_bn", out);
  }
  void separable_bn(const std::string& name, Count in, Count out) {
    push(name + "_dw", 9 * in);
    conv(name, in, out, 1);
    bn(name + "_bn", out);
  }
  void up(const std::string& name, Count in, Count out, Count k) { conv_bn(name, in, out, k); }
  void se(const std::string& name, Count c) {
    const Count hidden = std::max<Count>(1, c / 2);
    conv(name + "_squeeze", c, hidden, 1, false);
    conv(name + "_excite", hidden, c, 1);
  }

 private:
  void push(const std::string& name, Count n) { out_.push_back({name, n}); }
  std::vector<LayerCount>& out_;
};

std::string lvl(const std::string& prefix, int l) { return prefix + std::to_string(l); }

void unet_stage(Tally& t, const NetSpec& s, const std::string& name, Count in, Count out) {
  if (s.arch == Arch::R2UNet) {
    t.conv_bn(name + ".entry", in, out, 3);
    for (int u = 1; u < s.nc; ++u) t.conv_bn(name + ".rcl" + std::to_string(u), out, out, 3);
  } else {
    t.conv_bn(name + ".conv1", in, out, 3);
    t.conv_bn(name + ".conv2", out, out, 3);
  }
  if (s.arch == Arch::SEUNet) t.se(name + ".se", out);
}

void unet_family(Tally& t, const NetSpec& s) {
  Count ch = s.in_channels;
  for (int l = 0; l < s.depth; ++l) {
    const Count f = Count(s.nf) << l;
    unet_stage(t, s, lvl("enc", l), ch, f);
    ch = f;
  }
  for (int l = s.depth - 2; l >= 0; --l) {
    const Count f = Count(s.nf) << l;
    t.up(lvl("up", l), ch, f, 2);
    if (s.arch == Arch::AttUNet) {
      const std::string g = lvl("att", l);
      t.conv_bn(g + ".wx", f, f, 1);
      t.conv_bn(g + ".wg", f, f, 1);
      t.conv(g + ".psi", f, 1, 1);
    }
    unet_stage(t, s, lvl("dec", l), 2 * f, f);
    ch = f;
  }
  t.conv("head", ch, s.out_channels, 1);
}

void unetpp(Tally& t, const NetSpec& s) {
  const int L = s.depth;
  auto f = [&](int i) { return Count(s.nf) << i; };
  auto node = [&](int i, int j) { return "node" + std::to_string(i) + "_" + std::to_string(j); };
  Count ch = s.in_channels;
  for (int i = 0; i < L; ++i) {
    t.conv_bn(node(i, 0) + ".conv1", ch, f(i), 3);
    t.conv_bn(node(i, 0) + ".conv2", f(i), f(i), 3);
    ch = f(i);
  }
  for (int j = 1; j < L; ++j) {
    for (int i = 0; i + j < L; ++i) {
      const Count k = (i + j == L - 1) ? 3 : 1;
      t.up(node(i, j) + ".up", f(i + 1), f(i), 2);
      t.conv_bn(node(i, j) + ".conv1", j * f(i) + f(i), f(i), k);
      t.conv_bn(node(i, j) + ".conv2", f(i), f(i), k);
    }
  }
  if (s.deep_supervision) {
    for (int j = 1; j < L; ++j) t.conv("head" + std::to_string(j), f(0), s.out_channels, 1);
  } else {
    t.conv("head", f(0), s.out_channels, 1);
  }
}

void wnet_branch(Tally& t, const NetSpec& s, const std::string& b, Count in, Count out) {
  auto stage = [&](const std::string& name, int l, Count cin, Count cout) {
    if (l == 0) {
      t.conv_bn(name + ".conv1", cin, cout, 3);
      t.conv_bn(name + ".conv2", cout, cout, 3);
    } else {
      t.separable_bn(name + ".conv1", cin, cout);
      t.separable_bn(name + ".conv2", cout, cout);
    }
  };
  Count ch = in;
  for (int l = 0; l < s.depth; ++l) {
    const Count f = Count(s.nf) << l;
    stage(b + "." + lvl("enc", l), l, ch, f);
    ch = f;
  }
  for (int l = s.depth - 2; l >= 0; --l) {
    const Count f = Count(s.nf) << l;
    t.up(b + "." + lvl("up", l), ch, f, 3);
    stage(b + "." + lvl("dec", l), l, 2 * f, f);
    ch = f;
  }
  t.conv(b + ".head", ch, out, 1);
}

}  // namespace

std::vector<LayerCount> count_params_by_layer(const NetSpec& spec) {
  validate(spec);
  std::vector<LayerCount> out;
  Tally t(out);
  switch (spec.arch) {
    case Arch::UNet:
    case Arch::AttUNet:
    case Arch::R2UNet:
    case Arch::SEUNet: unet_family(t, spec); break;
    case Arch::UNetPP: unetpp(t, spec); break;
    case Arch::WNet:
      wnet_branch(t, spec, "b1", spec.in_channels, spec.out_channels);
      wnet_branch(t, spec, "b2", spec.out_channels, spec.out_channels);
      break;
  }
  return out;
}

std::int64_t count_params(const NetSpec& spec) {
  const auto layers = count_params_by_layer(spec);
  return std::accumulate(layers.begin(), layers.end(), std::int64_t{0},
                         [](std::int64_t acc, const LayerCount& l) { return acc + l.params; });
}

}  // namespace usmesh::nn
