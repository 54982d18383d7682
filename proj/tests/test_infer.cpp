#include "usmesh/error.hpp"
#include "usmesh/infer.hpp"

#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <random>

using namespace usmesh;
using usmesh::nn::Tensor;

namespace {

// slice z holds the constant z / 100 so a stub can tell which window it sees
Volume indexed_volume(int nz, int ny = 4, int nx = 5) {
  Volume v;
  v.data = Grid3<float>({nx, ny, nz});
  for (int z = 0; z < nz; ++z)
    for (int y = 0; y < ny; ++y)
      for (int x = 0; x < nx; ++x) v.data(z, y, x) = static_cast<float>(z) / 100.0f;
  v.spacing = Vec3(0.5, 0.25, 2.0);
  v.header = make_header(v.extent(), v.spacing, "v.raw");
  return v;
}

int centre_of(const Tensor<float>& x, int n) { return static_cast<int>(std::lround(x(n, 1, 0, 0) * 100.0f)); }

// every channel of the window centred at c is filled with value[c]
WindowModel per_centre(std::vector<float> value) {
  return [value](const Tensor<float>& x) {
    Tensor<float> out(x.shape());
    for (int n = 0; n < x.shape().n; ++n) out.image(n).setConstant(value[static_cast<std::size_t>(centre_of(x, n))]);
    return out;
  };
}

WindowModel constant_model(float v) {
  return [v](const Tensor<float>& x) {
    Tensor<float> out(x.shape());
    out.array().setConstant(v);
    return out;
  };
}

// independent aggregation oracle for per_centre stubs
float expected(const std::vector<float>& value, int nz, int z, Aggregation agg) {
  if (agg == Aggregation::Single) return value[static_cast<std::size_t>(std::clamp(z, 1, nz - 2))];
  std::vector<float> cands;
  for (int c = std::max(1, z - 1); c <= std::min(nz - 2, z + 1); ++c) cands.push_back(value[static_cast<std::size_t>(c)]);
  if (agg == Aggregation::Max) return *std::max_element(cands.begin(), cands.end());
  float sum = 0;
  for (float c : cands) sum += c;
  return sum / static_cast<float>(cands.size());
}

constexpr Aggregation kAggs[] = {Aggregation::Mean, Aggregation::Max, Aggregation::Single};

}  // namespace

TEST_CASE("constant stub aggregates to the constant") {
  for (Aggregation agg : kAggs) {
    const auto p = predict_volume(constant_model(0.7f), indexed_volume(6), agg);
    CHECK(p.extent() == indexed_volume(6).extent());
    CHECK((p.array() == 0.7f).all());
  }
}

TEST_CASE("three candidates reduce by mode") {
  // Z = 5: slice 2 sees centres 1, 2 and 3
  const std::vector<float> value{0, 0.2f, 0.4f, 0.9f, 0};
  const Volume v = indexed_volume(5);
  CHECK(predict_volume(per_centre(value), v, Aggregation::Mean)(2, 1, 1) == doctest::Approx(0.5));
  CHECK(predict_volume(per_centre(value), v, Aggregation::Max)(2, 1, 1) == 0.9f);
  CHECK(predict_volume(per_centre(value), v, Aggregation::Single)(2, 1, 1) == 0.4f);
  // boundary slices use the nearest window only
  CHECK(predict_volume(per_centre(value), v, Aggregation::Mean)(0, 0, 0) == 0.2f);
  CHECK(predict_volume(per_centre(value), v, Aggregation::Single)(4, 0, 0) == 0.9f);
  CHECK(predict_volume(per_centre(value), v, Aggregation::Mean)(1, 0, 0) == doctest::Approx(0.3));
}

TEST_CASE("window combinatorics match an independent oracle") {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<float> u(0, 1);
  for (int nz = 3; nz <= 11; ++nz) {
    std::vector<float> value(static_cast<std::size_t>(nz));
    for (auto& x : value) x = u(rng);
    const Volume v = indexed_volume(nz);
    for (Aggregation agg : kAggs) {
      const auto p = predict_volume(per_centre(value), v, agg, 1 + nz % 4);
      for (int z = 0; z < nz; ++z) CHECK(p(z, 2, 3) == doctest::Approx(expected(value, nz, z, agg)).epsilon(1e-6));
    }
  }
}

TEST_CASE("invalid inputs") {
  CHECK_THROWS_AS(predict_volume(constant_model(0.5f), indexed_volume(2), Aggregation::Mean), ArgumentError);
  const WindowModel shrink = [](const Tensor<float>& x) { return Tensor<float>({x.shape().n, 3, 2, 2}); };
  CHECK_THROWS_AS(predict_volume(shrink, indexed_volume(4), Aggregation::Mean), ShapeError);
  nn::Net<float> net({nn::Arch::UNet, 2, nn::Activation::Sigmoid, 16, 16}, 1);
  CHECK_THROWS_AS(predict_volume(net, indexed_volume(4, 16, 8), Aggregation::Mean), ShapeError);
}

TEST_CASE("net prediction is deterministic and batch size independent") {
  nn::Net<float> net({nn::Arch::UNet, 2, nn::Activation::Sigmoid, 16, 16}, 3);
  Volume v = indexed_volume(7, 16, 16);
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<float> u(0, 1);
  for (auto& x : v.data.array()) x = u(rng);
  for (Aggregation agg : kAggs) {
    const auto ref = predict_volume(net, v, agg, 1);
    for (int bs : {2, 3, 5, 8}) CHECK((predict_volume(net, v, agg, bs).array() == ref.array()).all());
    CHECK((predict_volume(net, v, agg, 1).array() == ref.array()).all());
  }
  const auto mean = predict_volume(net, v, Aggregation::Mean);
  const auto max = predict_volume(net, v, Aggregation::Max);
  CHECK((mean.array() >= 0).all());
  CHECK((max.array() >= mean.array() - 1e-6f).all());
}

TEST_CASE("tanh outputs map to the unit range and keep counts monotone") {
  nn::Net<float> net({nn::Arch::UNet, 2, nn::Activation::Tanh, 16, 16}, 5);
  Volume v = indexed_volume(5, 16, 16);
  std::mt19937_64 rng(3);
  std::uniform_real_distribution<float> u(0, 1);
  for (auto& x : v.data.array()) x = u(rng);
  const auto raw = predict_volume(net, v, Aggregation::Mean, 4, OutputMapping::Raw);
  const auto unit = predict_volume(net, v, Aggregation::Mean, 4, OutputMapping::TanhToUnit);
  CHECK((unit.array() >= 0).all());
  CHECK((unit.array() <= 1).all());
  CHECK(((raw.array() + 1) / 2 - unit.array()).abs().maxCoeff() < 1e-6f);
  std::size_t prev = std::numeric_limits<std::size_t>::max();
  for (double t = 0; t <= 1.0; t += 0.05) {
    const auto n = static_cast<std::size_t>(decode_points(unit, t, v.spacing).points.cols());
    CHECK(n <= prev);
    prev = n;
  }
}

TEST_CASE("threshold rules") {
  Grid3<float> p({3, 2, 2});
  p(1, 1, 2) = 0.46f;
  CHECK(resolve_threshold(p, ThresholdRule::fraction(0.9)).t == doctest::Approx(0.414).epsilon(1e-6));
  CHECK(resolve_threshold(p, ThresholdRule::absolute(0.32)).t == 0.32);
  const auto full = resolve_threshold(p, ThresholdRule::fraction(1.0));
  CHECK(full.warnings.empty());
  CHECK(decode_points(p, full.t, Vec3(1, 1, 1)).points.cols() >= 1);

  const Grid3<float> zero({3, 2, 2});
  const auto z = resolve_threshold(zero, ThresholdRule::fraction(0.8));
  CHECK(z.t == 0);
  CHECK(z.warnings.size() == 1);
  CHECK(decode_points(zero, z.t, Vec3(1, 1, 1)).points.cols() == 12);
}

TEST_CASE("reconstruct composes prediction, threshold and decoding") {
  const Volume v = indexed_volume(5);
  CHECK(reconstruct(constant_model(0), v, Aggregation::Mean, ThresholdRule::absolute(0.5), v.spacing).points.cols() ==
        0);

  // 0.9 at (y 2, x 3) in the centre channel of the window centred on slice 2
  const WindowModel delta = [](const Tensor<float>& x) {
    Tensor<float> out(x.shape());
    for (int n = 0; n < x.shape().n; ++n)
      if (centre_of(x, n) == 2) out(n, 1, 2, 3) = 0.9f;
    return out;
  };
  for (Aggregation agg : {Aggregation::Max, Aggregation::Single}) {
    const auto cloud = reconstruct(delta, v, agg, ThresholdRule::absolute(0.5), v.spacing);
    REQUIRE(cloud.points.cols() == 1);
    CHECK(cloud.points.col(0).isApprox(Vec3(3 * 0.5, 2 * 0.25, 2 * 2.0)));
  }
  std::vector<std::string> warnings;
  const auto all = reconstruct(constant_model(0), v, Aggregation::Mean, ThresholdRule::fraction(0.5), v.spacing,
                               &warnings);
  CHECK(all.points.cols() == static_cast<Eigen::Index>(v.extent().voxels()));
  CHECK(warnings.size() == 1);
}

TEST_CASE("aggregation names") {
  for (Aggregation agg : kAggs) CHECK(parse_aggregation(to_string(agg)) == agg);
  CHECK(static_cast<int>(Aggregation::Mean) == 0);
  CHECK(static_cast<int>(Aggregation::Max) == 1);
  CHECK(static_cast<int>(Aggregation::Single) == 2);
  CHECK_THROWS_AS(parse_aggregation("median"), ArgumentError);
}
