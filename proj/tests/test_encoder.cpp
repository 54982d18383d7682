#include "usmesh/encoder.hpp"

#include <doctest.h>

#include <cmath>
#include <random>
#include <set>
#include <tuple>

using namespace usmesh;

namespace {

Mesh points(std::initializer_list<Vec3> pts) {
  Mesh m;
  m.vertices.resize(3, static_cast<Eigen::Index>(pts.size()));
  Eigen::Index i = 0;
  for (const auto& p : pts) m.vertices.col(i++) = p;
  m.faces.resize(3, 0);
  return m;
}

int count_nonzero(const Grid3<float>& g) { return static_cast<int>((g.array() != 0).count()); }

}  // namespace

TEST_CASE("vertex lands on its rounded voxel") {
  const Vec3 spacing{0.49479, 0.49479, 0.3125};
  const LabelVolume l = encode_mesh(points({{0.49479, 0.49479, 0.3125}}), {8, 8, 8}, spacing,
                                    EncodingMode::BinaryDilated, 0);
  CHECK(l.data(1, 1, 1) == 1);
  CHECK(count_nonzero(l.data) == 1);
  CHECK(l.warnings.empty());
}

TEST_CASE("soft edge values around one vertex") {
  const LabelVolume l = encode_mesh(points({{3, 3, 3}}), {7, 7, 7}, {1, 1, 1}, EncodingMode::SoftEdged, 1);
  CHECK(l.data(3, 3, 3) == 1);
  for (int dz = -1; dz <= 1; ++dz)
    for (int dy = -1; dy <= 1; ++dy)
      for (int dx = -1; dx <= 1; ++dx)
        if (dx || dy || dz) CHECK(l.data(3 + dz, 3 + dy, 3 + dx) == 0.5f);
  CHECK(count_nonzero(l.data) == 27);
}

TEST_CASE("soft edge takes the maximum over vertices") {
  const LabelVolume l =
      encode_mesh(points({{2, 2, 2}, {4, 2, 2}}), {7, 5, 5}, {1, 1, 1}, EncodingMode::SoftEdged, 2);
  CHECK(l.data(2, 2, 3) == doctest::Approx(2.0 / 3));
  CHECK(l.data(2, 2, 2) == 1);
  CHECK(l.data(2, 2, 4) == 1);
  CHECK(l.data(2, 2, 6) == doctest::Approx(1.0 / 3));
}

TEST_CASE("out-of-range vertices clip to the border") {
  const LabelVolume l =
      encode_mesh(points({{-5, -5, -5}}), {4, 4, 4}, {1, 1, 1}, EncodingMode::BinaryDilated, 0);
  CHECK(l.data(0, 0, 0) == 1);
  CHECK(count_nonzero(l.data) == 1);
}

TEST_CASE("binary dilation is a Chebyshev cube") {
  const LabelVolume l = encode_mesh(points({{4, 4, 4}}), {9, 9, 9}, {1, 1, 1}, EncodingMode::BinaryDilated, 2);
  CHECK(count_nonzero(l.data) == 125);
  CHECK(l.data(2, 2, 2) == 1);
  CHECK(l.data(1, 4, 4) == 0);
}

TEST_CASE("solid mode fills enclosed rings") {
  Mesh ring;
  std::vector<Vec3> pts;
  for (int a = 0; a < 360; a += 2) {
    const double r = 6, t = a * M_PI / 180;
    pts.emplace_back(10 + r * std::cos(t), 10 + r * std::sin(t), 2);
  }
  ring.vertices.resize(3, static_cast<Eigen::Index>(pts.size()));
  for (std::size_t i = 0; i < pts.size(); ++i) ring.vertices.col(static_cast<Eigen::Index>(i)) = pts[i];
  const LabelVolume solid = encode_mesh(ring, {21, 21, 5}, {1, 1, 1}, EncodingMode::Solid, 0);
  const LabelVolume binary = encode_mesh(ring, {21, 21, 5}, {1, 1, 1}, EncodingMode::BinaryDilated, 0);
  CHECK(binary.data(2, 10, 10) == 0);
  CHECK(solid.data(2, 10, 10) == 1);
  CHECK(solid.data(1, 10, 10) == 0);
  CHECK(count_nonzero(solid.data) > count_nonzero(binary.data));
}

TEST_CASE("empty and out-of-grid meshes warn") {
  Mesh empty;
  empty.vertices.resize(3, 0);
  const LabelVolume l = encode_mesh(empty, {4, 4, 4}, {1, 1, 1}, EncodingMode::SoftEdged, 2);
  CHECK(count_nonzero(l.data) == 0);
  CHECK_FALSE(l.warnings.empty());
}

TEST_CASE("decoding scales indices by spacing") {
  Grid3<float> prob({6, 6, 6});
  prob(2, 3, 4) = 0.9f;
  const PointCloud c = decode_points(prob, 0.32, {0.5, 0.5, 0.3125});
  REQUIRE(c.size() == 1);
  CHECK(c.points.col(0) == Eigen::Vector3d(4 * 0.5, 3 * 0.5, 2 * 0.3125));
  CHECK(decode_points(prob, 0.0, {1, 1, 1}).size() == 216);
  prob(0, 0, 0) = 1.0f;
  CHECK(decode_points(prob, 1.5, {1, 1, 1}).size() == 1);
}

TEST_CASE("point count does not grow with the threshold") {
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<float> u(0, 1);
  Grid3<float> prob({10, 10, 10});
  for (auto& v : prob.array()) v = u(rng);
  Eigen::Index last = prob.array().size() + 1;
  for (double t = 0; t <= 1.0; t += 0.05) {
    const auto n = decode_points(prob, t, {1, 1, 1}).size();
    CHECK(n <= last);
    last = n;
  }
}

TEST_CASE("soft labels peak at every vertex voxel") {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(0, 9);
  Mesh m;
  m.vertices.resize(3, 40);
  for (int i = 0; i < 40; ++i) m.vertices.col(i) = Vec3(u(rng), u(rng), u(rng));
  const Extent e{10, 10, 10};
  const LabelVolume l = encode_mesh(m, e, {1, 1, 1}, EncodingMode::SoftEdged, 2);
  for (int i = 0; i < 40; ++i) {
    const auto v = voxel_of(m.vertices.col(i), {1, 1, 1}, e);
    CHECK(l.data(v.z(), v.y(), v.x()) == 1);
  }
  CHECK(l.data.array().maxCoeff() <= 1);
  CHECK(l.data.array().minCoeff() >= 0);
}

TEST_CASE("encode then decode recovers the rounded vertex set") {
  std::mt19937_64 rng(7);
  const Vec3 spacing{0.49479, 0.49479, 0.3125};
  const Extent e{24, 20, 16};
  std::uniform_real_distribution<double> x(-3, 15), y(-3, 13), z(-3, 8);
  std::uniform_int_distribution<int> n(1, 300);
  for (int trial = 0; trial < 100; ++trial) {
    Mesh m;
    m.vertices.resize(3, n(rng));
    for (Eigen::Index i = 0; i < m.vertices.cols(); ++i) m.vertices.col(i) = Vec3(x(rng), y(rng), z(rng));
    std::set<std::tuple<double, double, double>> expected;
    for (Eigen::Index i = 0; i < m.vertices.cols(); ++i) {
      // Independent rounding: half away from zero, then clip.
      int idx[3];
      for (int a = 0; a < 3; ++a) {
        const double q = m.vertices(a, i) / spacing[a];
        const int hi = a == 0 ? e.nx - 1 : a == 1 ? e.ny - 1 : e.nz - 1;
        idx[a] = std::clamp(static_cast<int>(q < 0 ? -std::floor(-q + 0.5) : std::floor(q + 0.5)), 0, hi);
      }
      expected.emplace(idx[0] * spacing[0], idx[1] * spacing[1], idx[2] * spacing[2]);
    }
    const PointCloud c = decode_points(encode_mesh(m, e, spacing, EncodingMode::BinaryDilated, 0).data, 0.5, spacing);
    std::set<std::tuple<double, double, double>> got;
    for (Eigen::Index i = 0; i < c.size(); ++i) got.emplace(c.points(0, i), c.points(1, i), c.points(2, i));
    CHECK(got.size() == static_cast<std::size_t>(c.size()));
    CHECK(got == expected);
  }
}
