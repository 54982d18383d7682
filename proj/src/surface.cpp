#include "usmesh/surface.hpp"

#include "usmesh/error.hpp"

#include <Eigen/Geometry>
#include <png.h>

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdio>
#include <limits>
#include <unordered_map>

namespace usmesh {
namespace {

constexpr std::array<std::array<int, 3>, 8> kCorner{{
    {0, 0, 0}, {1, 0, 0}, {1, 1, 0}, {0, 1, 0}, {0, 0, 1}, {1, 0, 1}, {1, 1, 1}, {0, 1, 1}}};

constexpr std::array<std::array<int, 2>, 12> kEdgeCorners{{
    {0, 1}, {1, 2}, {2, 3}, {3, 0}, {4, 5}, {5, 6}, {6, 7}, {7, 4}, {0, 4}, {1, 5}, {2, 6}, {3, 7}}};

// Faces with corners counter-clockwise seen from outside the cube.
constexpr std::array<std::array<int, 4>, 6> kFaces{{
    {0, 3, 2, 1}, {4, 5, 6, 7}, {0, 1, 5, 4}, {3, 7, 6, 2}, {0, 4, 7, 3}, {1, 2, 6, 5}}};

int edge_between(int a, int b) {
  for (int e = 0; e < 12; ++e) {
    const auto& c = kEdgeCorners[static_cast<std::size_t>(e)];
    if ((c[0] == a && c[1] == b) || (c[0] == b && c[1] == a)) return e;
  }
  return -1;
}

Eigen::Vector3d edge_midpoint(int e) {
  const auto& c = kEdgeCorners[static_cast<std::size_t>(e)];
  Eigen::Vector3d m;
  for (int k = 0; k < 3; ++k)
    m[k] = 0.5 * (kCorner[static_cast<std::size_t>(c[0])][static_cast<std::size_t>(k)] +
                  kCorner[static_cast<std::size_t>(c[1])][static_cast<std::size_t>(k)]);
  return m;
}

/// Closed directed loops of crossed edges for one corner case. On each face,
/// walking the corners counter-clockwise, a segment joins every low->high
/// crossing to the next high->low crossing; on ambiguous faces this keeps the
/// two inside corners apart. Adjacent faces traverse their shared edge in
/// opposite directions, so every crossing starts one segment and ends one.
std::vector<std::vector<int>> case_loops(int mask) {
  auto high = [mask](int corner) { return ((mask >> corner) & 1) != 0; };
  std::array<int, 12> next;
  next.fill(-1);
  for (const auto& face : kFaces) {
    std::vector<std::pair<int, bool>> crossings;  // (edge, entering high)
    for (int i = 0; i < 4; ++i) {
      const int a = face[static_cast<std::size_t>(i)], b = face[static_cast<std::size_t>((i + 1) % 4)];
      if (high(a) != high(b)) crossings.emplace_back(edge_between(a, b), high(b));
    }
    const std::size_t n = crossings.size();
    for (std::size_t i = 0; i < n; ++i) {
      if (!crossings[i].second) continue;
      for (std::size_t j = 1; j < n; ++j) {
        const auto& c = crossings[(i + j) % n];
        if (!c.second) {
          next[static_cast<std::size_t>(crossings[i].first)] = c.first;
          break;
        }
      }
    }
  }
  std::vector<std::vector<int>> loops;
  std::array<bool, 12> used{};
  for (int start = 0; start < 12; ++start) {
    if (next[static_cast<std::size_t>(start)] < 0 || used[static_cast<std::size_t>(start)]) continue;
    std::vector<int> loop;
    for (int e = start; !used[static_cast<std::size_t>(e)]; e = next[static_cast<std::size_t>(e)]) {
      used[static_cast<std::size_t>(e)] = true;
      loop.push_back(e);
    }
    loops.push_back(std::move(loop));
  }
  return loops;
}

std::vector<std::vector<int>> build_table() {
  // Orientation of the walk: with only corner 0 inside, the polygon normal
  // must point away from it (towards lower values).
  const auto probe = case_loops(1).front();
  const Eigen::Vector3d a = edge_midpoint(probe[0]), b = edge_midpoint(probe[1]), c = edge_midpoint(probe[2]);
  const bool flip = (b - a).cross(c - a).dot(Eigen::Vector3d(1, 1, 1)) < 0;

  std::vector<std::vector<int>> table(256);
  for (int mask = 0; mask < 256; ++mask) {
    for (auto loop : case_loops(mask)) {
      if (flip) std::reverse(loop.begin(), loop.end());
      for (std::size_t i = 1; i + 1 < loop.size(); ++i) {
        table[static_cast<std::size_t>(mask)].insert(table[static_cast<std::size_t>(mask)].end(),
                                                     {loop[0], loop[i], loop[i + 1]});
      }
    }
  }
  return table;
}

}  // namespace

const std::vector<std::vector<int>>& marching_cubes_table() {
  static const std::vector<std::vector<int>> table = build_table();
  return table;
}

template <typename T>
Mesh marching_cubes(const Grid3<T>& field, double iso, const Vec3& spacing) {
  const int nx = field.nx(), ny = field.ny(), nz = field.nz();
  if (nx < 2 || ny < 2 || nz < 2) throw ShapeError("marching cubes needs at least 2 samples per axis");
  const auto& table = marching_cubes_table();

  std::vector<Eigen::Vector3d> vertices;
  std::vector<Eigen::Vector3i> faces;
  std::unordered_map<std::int64_t, int> vertex_of_edge;

  auto value = [&](int x, int y, int z) { return static_cast<double>(field(z, y, x)); };
  auto vertex = [&](int x, int y, int z, int e) {
    const auto& c = kEdgeCorners[static_cast<std::size_t>(e)];
    const auto& p = kCorner[static_cast<std::size_t>(c[0])];
    const auto& q = kCorner[static_cast<std::size_t>(c[1])];
    // Key on the lower grid point and the axis of the edge.
    int base[3], axis = 0;
    for (int k = 0; k < 3; ++k) {
      base[k] = std::min(p[static_cast<std::size_t>(k)], q[static_cast<std::size_t>(k)]);
      if (p[static_cast<std::size_t>(k)] != q[static_cast<std::size_t>(k)]) axis = k;
    }
    const int bx = x + base[0], by = y + base[1], bz = z + base[2];
    const std::int64_t key = static_cast<std::int64_t>(field.index(bz, by, bx)) * 3 + axis;
    const auto found = vertex_of_edge.find(key);
    if (found != vertex_of_edge.end()) return found->second;
    const double v0 = value(bx, by, bz);
    const double v1 = value(bx + (axis == 0), by + (axis == 1), bz + (axis == 2));
    const double t = (iso - v0) / (v1 - v0);
    Eigen::Vector3d pos(bx, by, bz);
    pos[axis] += t;
    vertices.push_back(pos.cwiseProduct(spacing));
    const int id = static_cast<int>(vertices.size()) - 1;
    vertex_of_edge.emplace(key, id);
    return id;
  };

  for (int z = 0; z + 1 < nz; ++z) {
    for (int y = 0; y + 1 < ny; ++y) {
      for (int x = 0; x + 1 < nx; ++x) {
        int mask = 0;
        for (int c = 0; c < 8; ++c) {
          const auto& o = kCorner[static_cast<std::size_t>(c)];
          if (value(x + o[0], y + o[1], z + o[2]) >= iso) mask |= 1 << c;
        }
        const auto& tris = table[static_cast<std::size_t>(mask)];
        for (std::size_t i = 0; i < tris.size(); i += 3)
          faces.emplace_back(vertex(x, y, z, tris[i]), vertex(x, y, z, tris[i + 1]), vertex(x, y, z, tris[i + 2]));
      }
    }
  }

  Mesh mesh;
  mesh.vertices.resize(3, static_cast<Eigen::Index>(vertices.size()));
  for (std::size_t i = 0; i < vertices.size(); ++i) mesh.vertices.col(static_cast<Eigen::Index>(i)) = vertices[i];
  mesh.faces.resize(3, static_cast<Eigen::Index>(faces.size()));
  for (std::size_t i = 0; i < faces.size(); ++i) mesh.faces.col(static_cast<Eigen::Index>(i)) = faces[i];
  return mesh;
}

template Mesh marching_cubes(const Grid3<float>&, double, const Vec3&);
template Mesh marching_cubes(const Grid3<double>&, double, const Vec3&);

bool render_screenshot(const Mesh& mesh, const std::filesystem::path& out_path, const ScreenshotOptions& options,
                       std::vector<std::string>* warnings) {
  if (mesh.vertex_count() == 0 || mesh.face_count() == 0) {
    if (warnings) warnings->push_back("empty mesh: no screenshot written");
    return false;
  }
  const int w = options.width, h = options.height;
  const Eigen::Vector3d lo = mesh.vertices.rowwise().minCoeff();
  const Eigen::Vector3d hi = mesh.vertices.rowwise().maxCoeff();
  const double extent = std::max({hi.x() - lo.x(), hi.y() - lo.y(), 1e-12});
  const double scale = 0.9 * std::min(w, h) / extent;
  const Eigen::Vector2d centre = 0.5 * (lo.head<2>() + hi.head<2>());

  std::vector<double> depth(static_cast<std::size_t>(w) * h, -std::numeric_limits<double>::infinity());
  std::vector<png_byte> pixels(static_cast<std::size_t>(w) * h, 16);
  auto project = [&](const Eigen::Vector3d& p) {
    return Eigen::Vector3d(w / 2.0 + (p.x() - centre.x()) * scale, h / 2.0 - (p.y() - centre.y()) * scale, p.z());
  };

  for (Eigen::Index f = 0; f < mesh.face_count(); ++f) {
    const Eigen::Vector3d a3 = mesh.vertices.col(mesh.faces(0, f));
    const Eigen::Vector3d b3 = mesh.vertices.col(mesh.faces(1, f));
    const Eigen::Vector3d c3 = mesh.vertices.col(mesh.faces(2, f));
    const Eigen::Vector3d n = (b3 - a3).cross(c3 - a3);
    if (n.norm() == 0) continue;
    const auto shade = static_cast<png_byte>(40 + 215 * std::abs(n.normalized().z()));
    const Eigen::Vector3d a = project(a3), b = project(b3), c = project(c3);
    const double area = (b.x() - a.x()) * (c.y() - a.y()) - (c.x() - a.x()) * (b.y() - a.y());
    if (area == 0) continue;
    const int x0 = std::max(0, static_cast<int>(std::floor(std::min({a.x(), b.x(), c.x()}))));
    const int x1 = std::min(w - 1, static_cast<int>(std::ceil(std::max({a.x(), b.x(), c.x()}))));
    const int y0 = std::max(0, static_cast<int>(std::floor(std::min({a.y(), b.y(), c.y()}))));
    const int y1 = std::min(h - 1, static_cast<int>(std::ceil(std::max({a.y(), b.y(), c.y()}))));
    for (int y = y0; y <= y1; ++y) {
      for (int x = x0; x <= x1; ++x) {
        const double px = x + 0.5, py = y + 0.5;
        const double wa = ((b.x() - px) * (c.y() - py) - (c.x() - px) * (b.y() - py)) / area;
        const double wb = ((c.x() - px) * (a.y() - py) - (a.x() - px) * (c.y() - py)) / area;
        const double wc = 1.0 - wa - wb;
        if (wa < 0 || wb < 0 || wc < 0) continue;
        const double z = wa * a.z() + wb * b.z() + wc * c.z();
        const std::size_t i = static_cast<std::size_t>(y) * w + x;
        if (z > depth[i]) {
          depth[i] = z;
          pixels[i] = shade;
        }
      }
    }
  }

  if (out_path.has_parent_path()) std::filesystem::create_directories(out_path.parent_path());
  FILE* fp = std::fopen(out_path.string().c_str(), "wb");
  if (!fp) throw Error("cannot open " + out_path.string() + " for writing");
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info || setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    std::fclose(fp);
    throw Error("failed to encode " + out_path.string());
  }
  png_init_io(png, fp);
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (int y = 0; y < h; ++y) png_write_row(png, pixels.data() + static_cast<std::size_t>(y) * w);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
  std::fclose(fp);
  return true;
}

}  // namespace usmesh
