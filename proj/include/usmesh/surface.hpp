#pragma once

#include "usmesh/grid.hpp"
#include "usmesh/mesh.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace usmesh {

/// Isosurface of `field` at `iso` by marching cubes, vertex coordinates in mm
/// (index * spacing). A corner counts as inside when its value is >= iso.
/// Vertices on shared cube edges are shared; triangle normals point towards
/// decreasing values. Returns an empty mesh when iso is outside the value
/// range. Throws ShapeError when a dimension is smaller than 2.
template <typename T>
Mesh marching_cubes(const Grid3<T>& field, double iso, const Vec3& spacing);

extern template Mesh marching_cubes(const Grid3<float>&, double, const Vec3&);
extern template Mesh marching_cubes(const Grid3<double>&, double, const Vec3&);

/// Triangles (as cube edge ids 0-11) for each of the 256 corner cases.
const std::vector<std::vector<int>>& marching_cubes_table();

struct ScreenshotOptions {
  int width = 512;
  int height = 512;
};

/// Orthographic view down the z axis with depth buffering and Lambert
/// shading, written as a PNG. An empty mesh writes nothing and returns false
/// with a warning.
bool render_screenshot(const Mesh& mesh, const std::filesystem::path& out_path, const ScreenshotOptions& options = {},
                       std::vector<std::string>* warnings = nullptr);

}  // namespace usmesh
