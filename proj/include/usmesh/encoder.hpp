#pragma once

#include "usmesh/grid.hpp"
#include "usmesh/mesh.hpp"
#include "usmesh/volume.hpp"

#include <string>
#include <vector>

namespace usmesh {

enum class EncodingMode {
  BinaryDilated,  // 1 within Chebyshev radius r of a vertex voxel
  SoftEdged,      // 1 - d / (r + 1) at Chebyshev distance d <= r ("saturated")
  Solid,          // binary-dilated, then per-slice closing and hole filling
};

/// Per-voxel supervision in [0, 1] on the grid of a paired volume.
struct LabelVolume {
  Grid3<float> data;
  EncodingMode mode = EncodingMode::SoftEdged;
  int radius = 2;
  std::vector<std::string> warnings;
};

/// Voxel of a physical point: round-half-away-from-zero of mm / spacing,
/// clipped to the grid.
Eigen::Vector3i voxel_of(const Vec3& point_mm, const Vec3& spacing, const Extent& extent);

/// Embeds mesh vertices into a label volume aligned with `grid`. Vertices
/// outside the grid are clipped onto its boundary; when every vertex was
/// outside, a warning is attached to the result.
LabelVolume encode_mesh(const Mesh& mesh, const Extent& grid, const Vec3& spacing,
                        EncodingMode mode, int radius);

inline LabelVolume encode_mesh(const Mesh& mesh, const Volume& grid, EncodingMode mode, int radius) {
  return encode_mesh(mesh, grid.extent(), grid.spacing, mode, radius);
}

/// Points (index * spacing, mm) of all voxels with value >= t; t is clamped
/// to [0, 1].
template <typename T>
PointCloud decode_points(const Grid3<T>& prob, double t, const Vec3& spacing);

extern template PointCloud decode_points(const Grid3<float>&, double, const Vec3&);
extern template PointCloud decode_points(const Grid3<double>&, double, const Vec3&);

}  // namespace usmesh
