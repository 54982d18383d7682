#pragma once

#include <Eigen/Core>

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace usmesh {

/// Triangle mesh in millimetre coordinates; one column per vertex / face.
struct Mesh {
  Eigen::Matrix3Xd vertices;
  Eigen::Matrix3Xi faces;

  Eigen::Index vertex_count() const { return vertices.cols(); }
  Eigen::Index face_count() const { return faces.cols(); }
};

struct PointCloud {
  Eigen::Matrix3Xd points;

  Eigen::Index size() const { return points.cols(); }
  bool empty() const { return points.cols() == 0; }
};

/// Reads ASCII or binary little-endian PLY. Polygons with more than three
/// indices are fan-triangulated: (0,1,2,3) -> (0,1,2), (0,2,3).
/// Throws FormatError on malformed input and IntegrityError on face indices
/// out of range.
Mesh read_ply(std::span<const std::byte> bytes);

/// Serializes vertices as float32; faces (if any) as uchar/int lists.
/// Throws FormatError for an empty vertex list.
std::vector<std::byte> write_ply(const Mesh& mesh, bool ascii);

Mesh read_ply_file(const std::filesystem::path& path);
void write_ply_file(const std::filesystem::path& path, const Mesh& mesh, bool ascii = false);

inline PointCloud to_cloud(const Mesh& mesh) { return {mesh.vertices}; }
inline Mesh to_mesh(const PointCloud& cloud) { return {cloud.points, Eigen::Matrix3Xi(3, 0)}; }

}  // namespace usmesh
