#include "usmesh/error.hpp"
#include "usmesh/mesh.hpp"

#include <doctest.h>

#include <cstring>
#include <random>

using namespace usmesh;

namespace {

std::vector<std::byte> bytes_of(const std::string& s) {
  std::vector<std::byte> out(s.size());
  std::memcpy(out.data(), s.data(), s.size());
  return out;
}

Mesh triangle() {
  Mesh m;
  m.vertices.resize(3, 3);
  m.vertices << 0, 1, 0, 0, 0, 1, 0, 0, 0;
  m.faces.resize(3, 1);
  m.faces << 0, 1, 2;
  return m;
}

// Coordinates exactly representable in float32 so round-trips compare equal.
Mesh random_mesh(std::mt19937_64& rng, int nv, int nf) {
  std::uniform_int_distribution<int> coord(-100000, 100000);
  std::uniform_int_distribution<int> idx(0, nv - 1);
  Mesh m;
  m.vertices.resize(3, nv);
  for (int i = 0; i < nv; ++i)
    for (int a = 0; a < 3; ++a) m.vertices(a, i) = coord(rng) / 64.0;
  m.faces.resize(3, nf);
  for (int f = 0; f < nf; ++f)
    for (int a = 0; a < 3; ++a) m.faces(a, f) = idx(rng);
  return m;
}

bool same(const Mesh& a, const Mesh& b) { return a.vertices == b.vertices && a.faces == b.faces; }

}  // namespace

TEST_CASE("ascii triangle") {
  const std::string text =
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 2\n";
  const Mesh m = read_ply(bytes_of(text));
  CHECK(m.vertex_count() == 3);
  CHECK(m.face_count() == 1);
  CHECK(same(m, triangle()));
}

TEST_CASE("binary and ascii encodings agree") {
  const Mesh m = triangle();
  CHECK(same(read_ply(write_ply(m, true)), read_ply(write_ply(m, false))));
  CHECK(same(read_ply(write_ply(m, false)), m));
}

TEST_CASE("quads are fan-triangulated") {
  const std::string text =
      "ply\nformat ascii 1.0\nelement vertex 4\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n4 0 1 2 3\n";
  const Mesh m = read_ply(bytes_of(text));
  REQUIRE(m.face_count() == 2);
  CHECK(m.faces.col(0) == Eigen::Vector3i(0, 1, 2));
  CHECK(m.faces.col(1) == Eigen::Vector3i(0, 2, 3));
}

TEST_CASE("malformed inputs") {
  CHECK_THROWS_AS(read_ply(bytes_of("ply\nformat ascii 1.0\nend_header\n")), FormatError);
  const std::string bad_index =
      "ply\nformat ascii 1.0\nelement vertex 3\nproperty float x\nproperty float y\nproperty float z\n"
      "element face 1\nproperty list uchar int vertex_indices\nend_header\n0 0 0\n1 0 0\n0 1 0\n3 0 1 7\n";
  CHECK_THROWS_AS(read_ply(bytes_of(bad_index)), IntegrityError);
  CHECK_THROWS_AS(write_ply(Mesh{}, true), FormatError);
}

TEST_CASE("extra vertex properties are skipped") {
  const std::string text =
      "ply\nformat ascii 1.0\ncomment made by hand\nelement vertex 2\nproperty float x\nproperty float nx\n"
      "property float y\nproperty float z\nproperty uchar red\nend_header\n1 9 2 3 255\n4 9 5 6 0\n";
  const Mesh m = read_ply(bytes_of(text));
  REQUIRE(m.vertex_count() == 2);
  CHECK(m.vertices.col(1) == Eigen::Vector3d(4, 5, 6));
  CHECK(m.face_count() == 0);
}

TEST_CASE("randomized meshes round-trip in both encodings") {
  std::mt19937_64 rng(99);
  for (int i = 0; i < 50; ++i) {
    const Mesh m = random_mesh(rng, 1 + i * 7, i * 5);
    CHECK(same(read_ply(write_ply(m, true)), m));
    CHECK(same(read_ply(write_ply(m, false)), m));
  }
}

TEST_CASE("point cloud without faces") {
  std::mt19937_64 rng(4);
  const Mesh m = random_mesh(rng, 10000, 0);
  CHECK(same(read_ply(write_ply(m, false)), m));
  CHECK(same(read_ply(write_ply(m, true)), m));
}

TEST_CASE("coordinates are stored as float32") {
  Mesh m = triangle();
  m.vertices(0, 0) = 0.1;
  const Mesh back = read_ply(write_ply(m, false));
  CHECK(back.vertices(0, 0) == static_cast<double>(0.1f));
}
