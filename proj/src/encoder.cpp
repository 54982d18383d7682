#include "usmesh/encoder.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <deque>

namespace usmesh {
namespace {

// Closing (dilate then erode, cube element of the given radius) followed by
// filling background regions not connected to the slice border.
void close_and_fill(Eigen::Ref<Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> slice,
                    int radius) {
  const int ny = static_cast<int>(slice.rows());
  const int nx = static_cast<int>(slice.cols());
  const int r = std::max(radius, 1);
  using Mask = Eigen::Array<std::uint8_t, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  Mask in = (slice > 0.5f).cast<std::uint8_t>();

  auto morph = [&](const Mask& src, bool dilate) {
    Mask dst(ny, nx);
    for (int y = 0; y < ny; ++y) {
      for (int x = 0; x < nx; ++x) {
        bool hit = !dilate;
        for (int dy = -r; dy <= r; ++dy) {
          for (int dx = -r; dx <= r; ++dx) {
            const int yy = y + dy, xx = x + dx;
            // Outside the slice counts as background for dilation and as
            // foreground for erosion, so closing never shrinks at the border.
            const bool v = (yy >= 0 && yy < ny && xx >= 0 && xx < nx) ? src(yy, xx) != 0 : !dilate;
            if (dilate && v) hit = true;
            if (!dilate && !v) hit = false;
          }
        }
        dst(y, x) = hit ? 1 : 0;
      }
    }
    return dst;
  };
  Mask closed = morph(morph(in, true), false);

  Mask outside = Mask::Zero(ny, nx);
  std::deque<std::pair<int, int>> queue;
  auto seed = [&](int y, int x) {
    if (closed(y, x) == 0 && outside(y, x) == 0) {
      outside(y, x) = 1;
      queue.emplace_back(y, x);
    }
  };
  for (int x = 0; x < nx; ++x) {
    seed(0, x);
    seed(ny - 1, x);
  }
  for (int y = 0; y < ny; ++y) {
    seed(y, 0);
    seed(y, nx - 1);
  }
  while (!queue.empty()) {
    auto [y, x] = queue.front();
    queue.pop_front();
    if (y > 0) seed(y - 1, x);
    if (y + 1 < ny) seed(y + 1, x);
    if (x > 0) seed(y, x - 1);
    if (x + 1 < nx) seed(y, x + 1);
  }
  slice = (outside == 0).cast<float>();
}

}  // namespace

Eigen::Vector3i voxel_of(const Vec3& point_mm, const Vec3& spacing, const Extent& extent) {
  const Eigen::Vector3i upper(extent.nx - 1, extent.ny - 1, extent.nz - 1);
  Eigen::Vector3i v;
  for (int k = 0; k < 3; ++k) {
    const double idx = std::round(point_mm[k] / spacing[k]);
    v[k] = static_cast<int>(std::clamp(idx, 0.0, static_cast<double>(upper[k])));
  }
  return v;
}

LabelVolume encode_mesh(const Mesh& mesh, const Extent& grid, const Vec3& spacing, EncodingMode mode,
                        int radius) {
  if ((spacing.array() <= 0).any()) throw ArgumentError("grid spacing must be positive");
  if (radius < 0) throw ArgumentError("encoding radius must be >= 0");
  if (grid.voxels() == 0) throw ArgumentError("empty label grid");

  LabelVolume label;
  label.mode = mode;
  label.radius = radius;
  label.data = Grid3<float>(grid);

  const int r = radius;
  bool any_inside = false;
  for (Eigen::Index i = 0; i < mesh.vertices.cols(); ++i) {
    const Vec3 p = mesh.vertices.col(i);
    const Vec3 idx = (p.array() / spacing.array()).round();
    const bool inside = idx.x() >= 0 && idx.y() >= 0 && idx.z() >= 0 && idx.x() < grid.nx &&
                        idx.y() < grid.ny && idx.z() < grid.nz;
    any_inside = any_inside || inside;
    const Eigen::Vector3i c = voxel_of(p, spacing, grid);
    for (int dz = -r; dz <= r; ++dz) {
      for (int dy = -r; dy <= r; ++dy) {
        for (int dx = -r; dx <= r; ++dx) {
          const int z = c.z() + dz, y = c.y() + dy, x = c.x() + dx;
          if (!label.data.contains(z, y, x)) continue;
          float value = 1.0f;
          if (mode == EncodingMode::SoftEdged) {
            const int d = std::max({std::abs(dx), std::abs(dy), std::abs(dz)});
            value = 1.0f - static_cast<float>(d) / static_cast<float>(r + 1);
          }
          float& cell = label.data(z, y, x);
          cell = std::max(cell, value);
        }
      }
    }
  }

  if (mode == EncodingMode::Solid) {
    for (int z = 0; z < grid.nz; ++z) close_and_fill(label.data.slice(z), radius);
  }
  if (mesh.vertices.cols() == 0) {
    label.warnings.emplace_back("mesh has no vertices; label volume is all zero");
  } else if (!any_inside) {
    label.warnings.emplace_back("all mesh vertices lie outside the volume grid; labels were clipped to its boundary");
  }
  return label;
}

template <typename T>
PointCloud decode_points(const Grid3<T>& prob, double t, const Vec3& spacing) {
  const double threshold = std::clamp(t, 0.0, 1.0);
  std::size_t count = 0;
  const auto& a = prob.array();
  for (Eigen::Index i = 0; i < a.size(); ++i)
    if (static_cast<double>(a[i]) >= threshold) ++count;

  PointCloud cloud;
  cloud.points.resize(3, static_cast<Eigen::Index>(count));
  Eigen::Index col = 0;
  for (int z = 0; z < prob.nz(); ++z) {
    for (int y = 0; y < prob.ny(); ++y) {
      for (int x = 0; x < prob.nx(); ++x) {
        if (static_cast<double>(prob(z, y, x)) >= threshold) {
          cloud.points.col(col++) = Vec3(x * spacing.x(), y * spacing.y(), z * spacing.z());
        }
      }
    }
  }
  return cloud;
}

template PointCloud decode_points(const Grid3<float>&, double, const Vec3&);
template PointCloud decode_points(const Grid3<double>&, double, const Vec3&);

}  // namespace usmesh
