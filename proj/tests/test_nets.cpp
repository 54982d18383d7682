#include "usmesh/error.hpp"
#include "usmesh/nets/net.hpp"

#include <doctest.h>

#include <cmath>
#include <filesystem>
#include <fstream>
#include <random>

using namespace usmesh;
using namespace usmesh::nn;

namespace {

const Arch kArchs[] = {Arch::UNet, Arch::AttUNet, Arch::R2UNet, Arch::SEUNet, Arch::UNetPP, Arch::WNet};

// Basic U-Net written out level by level: two 3x3 conv+BN blocks per encoder
// level, a 2x2 transpose conv+BN per decoder level, two 3x3 conv+BN blocks
// after each concatenation, and a 1x1 head.
std::int64_t unet_formula(std::int64_t nf) {
  std::int64_t p = 0, c = 3;
  std::int64_t f[5];
  for (int l = 0; l < 5; ++l) f[l] = nf << l;
  auto conv_bn = [&](std::int64_t in, std::int64_t out, std::int64_t k) { p += k * k * in * out + out + 2 * out; };
  for (int l = 0; l < 5; ++l) {
    conv_bn(c, f[l], 3);
    conv_bn(f[l], f[l], 3);
    c = f[l];
  }
  for (int l = 3; l >= 0; --l) {
    conv_bn(c, f[l], 2);
    conv_bn(2 * f[l], f[l], 3);
    conv_bn(f[l], f[l], 3);
    c = f[l];
  }
  return p + c * 3 + 3;
}

Tensor<float> random_input(int n, int h, int w, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<float> u(0, 1);
  Tensor<float> t({n, 3, h, w});
  for (auto& v : t.array()) v = u(rng);
  return t;
}

}  // namespace

TEST_CASE("closed-form U-Net count") {
  for (int nf : {1, 2, 4, 8, 16}) {
    CAPTURE(nf);
    const NetSpec spec{Arch::UNet, nf};
    CHECK(count_params(spec) == unet_formula(nf));
  }
  CHECK(count_params({Arch::UNet, 16}) == 1944563);
  const double ratio = static_cast<double>(count_params({Arch::UNet, 16})) / count_params({Arch::UNet, 8});
  CHECK(ratio == doctest::Approx(4.0).epsilon(0.02));
}

TEST_CASE("closed-form counts match instantiated nets") {
  std::vector<NetSpec> specs;
  for (Arch a : kArchs)
    for (int nf : {2, 4}) specs.push_back({a, nf, Activation::Sigmoid, 32, 32});
  specs.push_back({Arch::R2UNet, 3, Activation::Sigmoid, 32, 32, 3, 3, 3, 3});
  specs.push_back({Arch::UNetPP, 2, Activation::Sigmoid, 32, 32, 3, 3, 2, 2, 5, true});
  for (const auto& spec : specs) {
    CAPTURE(spec_string(spec));
    Net<float> net(spec, 1);
    CHECK(net.parameter_count() == count_params(spec));
    const auto closed = count_params_by_layer(spec);
    const auto built = net.layer_report();
    REQUIRE(closed.size() == built.size());
    for (std::size_t i = 0; i < closed.size(); ++i) {
      CHECK(closed[i].layer == built[i].layer);
      CHECK(closed[i].params == built[i].params);
    }
  }
}

TEST_CASE("published model sizes within tolerance") {
  struct Row {
    NetSpec spec;
    std::int64_t target;
  };
  const Row rows[] = {
      {{Arch::AttUNet, 16}, 1989767},
      {{Arch::R2UNet, 16}, 1999571},
      {{Arch::SEUNet, 16}, 2054355},
      {{Arch::SEUNet, 8}, 515179},
      {{Arch::UNetPP, 8}, 514219},
      {{Arch::UNetPP, 16}, 2050387},
      {{Arch::WNet, 16}, 1159091},
      {{Arch::R2UNet, 8, Activation::Sigmoid, 256, 256, 3, 3, 3, 3}, 751035},
  };
  for (const auto& r : rows) {
    CAPTURE(spec_string(r.spec));
    const double rel = std::abs(static_cast<double>(count_params(r.spec)) - r.target) / r.target;
    CHECK(rel <= 0.10);
  }
  CHECK(count_params({Arch::AttUNet, 16}) == 1989767);
  CHECK(count_params({Arch::SEUNet, 16}) == 2054355);
  CHECK(count_params({Arch::SEUNet, 8}) == 515179);
}

TEST_CASE("shapes are preserved and bad planes rejected") {
  for (Arch a : kArchs) {
    CAPTURE(to_string(a));
    Net<float> net({a, 2, Activation::Sigmoid, 32, 48}, 3);
    const Tensor<float> out = net.predict(random_input(2, 32, 48, 4));
    CHECK(out.shape() == Shape{2, 3, 32, 48});
    CHECK_THROWS_AS(net.predict(random_input(1, 48, 32, 4)), ShapeError);
  }
  CHECK_THROWS_AS(Net<float>({Arch::UNet, 2, Activation::Sigmoid, 30, 32}, 1), ShapeError);
  CHECK_THROWS_AS(parse_arch("vnet"), ArgumentError);
}

TEST_CASE("outputs lie in the activation codomain") {
  const Tensor<float> x = random_input(2, 32, 32, 5);
  for (Arch a : kArchs) {
    CAPTURE(to_string(a));
    Net<float> sig({a, 2, Activation::Sigmoid, 32, 32}, 6);
    auto o = sig.predict(x).array();
    CHECK(o.minCoeff() > 0);
    CHECK(o.maxCoeff() < 1);
    Net<float> hs({a, 2, Activation::HardSigmoid, 32, 32}, 6);
    o = hs.predict(x).array();
    CHECK(o.minCoeff() >= 0);
    CHECK(o.maxCoeff() <= 1);
    Net<float> th({a, 2, Activation::Tanh, 32, 32}, 6);
    o = th.predict(x).array();
    CHECK(o.minCoeff() >= -1);
    CHECK(o.maxCoeff() <= 1);
  }
}

TEST_CASE("hard sigmoid is the clamped line") {
  CHECK(hard_sigmoid(0.0) == 0.5);
  CHECK(hard_sigmoid(1.0) == doctest::Approx(0.7));
  CHECK(hard_sigmoid(2.5) == 1.0);
  CHECK(hard_sigmoid(-2.5) == 0.0);
  CHECK(hard_sigmoid(10.0) == 1.0);
  CHECK(hard_sigmoid(-10.0) == 0.0);
}

TEST_CASE("fresh net on zeros gives the activation of zero") {
  Net<float> net({Arch::UNet, 1, Activation::Sigmoid, 32, 32}, 2);
  const Tensor<float> out = net.predict(Tensor<float>({1, 3, 32, 32}));
  CHECK(out.shape() == Shape{1, 3, 32, 32});
  CHECK((out.array() == 0.5f).all());
}

TEST_CASE("seeded construction is deterministic") {
  const Tensor<float> x = random_input(1, 32, 32, 9);
  for (Arch a : kArchs) {
    Net<float> n1({a, 2, Activation::Sigmoid, 32, 32}, 42), n2({a, 2, Activation::Sigmoid, 32, 32}, 42);
    Net<float> n3({a, 2, Activation::Sigmoid, 32, 32}, 43);
    CHECK((n1.predict(x).array() == n2.predict(x).array()).all());
    bool differs = false;
    for (std::size_t i = 0; i < n1.parameters().size(); ++i)
      differs = differs || (n1.parameters()[i].var->value.array() != n3.parameters()[i].var->value.array()).any();
    CHECK(differs);
  }
}

TEST_CASE("float and double nets share their initialization") {
  Net<float> f({Arch::SEUNet, 2, Activation::Sigmoid, 32, 32}, 5);
  Net<double> d({Arch::SEUNet, 2, Activation::Sigmoid, 32, 32}, 5);
  REQUIRE(f.parameters().size() == d.parameters().size());
  for (std::size_t i = 0; i < f.parameters().size(); ++i)
    CHECK((f.parameters()[i].var->value.array() == d.parameters()[i].var->value.array().cast<float>()).all());
}

TEST_CASE("attention gates emit masks in the unit range") {
  Net<float> net({Arch::AttUNet, 2, Activation::Sigmoid, 32, 32}, 1);
  Probe<float> probe;
  net.forward(constant(random_input(2, 32, 32, 1)), false, &probe);
  REQUIRE(probe.attention_masks.size() == 4);
  int h = 4;
  for (const auto& m : probe.attention_masks) {
    CHECK(m.shape() == Shape{2, 1, h, h});
    CHECK(m.array().minCoeff() >= 0);
    CHECK(m.array().maxCoeff() <= 1);
    h *= 2;
  }
}

TEST_CASE("squeeze of equal channels is uniform") {
  Tensor<double> x({2, 4, 3, 3});
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<double> u(0, 1);
  for (int n = 0; n < 2; ++n)
    for (int y = 0; y < 3; ++y)
      for (int xx = 0; xx < 3; ++xx) {
        const double v = u(rng);
        for (int c = 0; c < 4; ++c) x(n, c, y, xx) = v;
      }
  const auto s = global_avg_pool(constant(x))->value;
  for (int n = 0; n < 2; ++n)
    for (int c = 1; c < 4; ++c) CHECK(s(n, c, 0, 0) == s(n, 0, 0, 0));

  Net<float> net({Arch::SEUNet, 2, Activation::Sigmoid, 32, 32}, 1);
  Probe<float> probe;
  net.forward(constant(random_input(1, 32, 32, 2)), false, &probe);
  CHECK(probe.se_gains.size() == 9);
  for (const auto& g : probe.se_gains) {
    CHECK(g.shape().h == 1);
    CHECK(g.array().minCoeff() > 0);
    CHECK(g.array().maxCoeff() < 1);
  }
}

TEST_CASE("spec strings round-trip") {
  const NetSpec spec{Arch::R2UNet, 8, Activation::Tanh, 64, 96, 3, 3, 3, 2, 5, false};
  CHECK(parse_spec_string(spec_string(spec)) == spec);
  for (Arch a : kArchs) CHECK(parse_arch(to_string(a)) == a);
  for (Activation a : {Activation::Sigmoid, Activation::HardSigmoid, Activation::Tanh, Activation::Linear})
    CHECK(parse_activation(to_string(a)) == a);
}

TEST_CASE("checkpoints restore weights and check the spec") {
  const auto dir = std::filesystem::temp_directory_path() / "usmesh_nets";
  std::filesystem::create_directories(dir);
  const auto path = dir / "a.ckpt";
  const NetSpec spec{Arch::AttUNet, 2, Activation::Sigmoid, 32, 32};
  Net<float> net(spec, 11);
  // Move the batch-norm statistics away from their initial values.
  net.forward(constant(random_input(2, 32, 32, 12)), true);
  save_checkpoint(path, net);

  const Tensor<float> x = random_input(1, 32, 32, 13);
  Net<float> loaded = load_checkpoint(path);
  CHECK(loaded.spec() == spec);
  CHECK((loaded.predict(x).array() == net.predict(x).array()).all());

  Net<float> other(spec, 99);
  load_checkpoint(path, other);
  CHECK((other.predict(x).array() == net.predict(x).array()).all());

  Net<float> wrong({Arch::UNet, 2, Activation::Sigmoid, 32, 32}, 1);
  CHECK_THROWS_AS(load_checkpoint(path, wrong), SpecMismatchError);
  CHECK(read_checkpoint_spec(path) == spec);

  std::ofstream(dir / "bad.ckpt") << "not a checkpoint";
  CHECK_THROWS_AS(load_checkpoint(dir / "bad.ckpt"), FormatError);

  const auto size = std::filesystem::file_size(path);
  std::filesystem::copy_file(path, dir / "short.ckpt", std::filesystem::copy_options::overwrite_existing);
  std::filesystem::resize_file(dir / "short.ckpt", size - 10);
  CHECK_THROWS_AS(load_checkpoint(dir / "short.ckpt"), ValidationError);
}
