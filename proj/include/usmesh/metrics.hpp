#pragma once

#include "usmesh/mesh.hpp"

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

namespace usmesh {

/// Exact nearest-neighbour queries over a fixed point set.
class KdTree {
 public:
  explicit KdTree(const Eigen::Matrix3Xd& points);

  /// Squared distance to the nearest stored point.
  double nearest_squared(const Eigen::Vector3d& q) const;

 private:
  struct Node {
    int point = -1;  // column of the splitting point
    int axis = 0;
    int left = -1;
    int right = -1;
  };

  int build(std::vector<int>& idx, int begin, int end, int depth);
  void search(int node, const Eigen::Vector3d& q, double& best) const;

  Eigen::Matrix3Xd points_;
  std::vector<Node> nodes_;
  int root_ = -1;
};

enum class ChamferBackend { BruteForce, KdTree };

/// Mean squared nearest-neighbour distance from S to T plus from T to S
/// (mm^2). Throws UndefinedDistanceError if either cloud is empty.
double chamfer_exact(const PointCloud& s, const PointCloud& t,
                     ChamferBackend backend = ChamferBackend::KdTree);

struct ChamferResult {
  double value = 0;
  std::optional<int> v_used;  // empty when both clouds were used whole
  std::uint64_t seed = 0;
};

/// Draws min(v, |cloud|) points from each cloud uniformly without replacement
/// and evaluates chamfer_exact on the subsets.
ChamferResult chamfer_sampled(const PointCloud& s, const PointCloud& t, int v, std::uint64_t seed);

/// `count` distinct columns chosen uniformly (partial Fisher-Yates).
Eigen::Matrix3Xd sample_points(const Eigen::Matrix3Xd& points, int count, std::uint64_t seed);

}  // namespace usmesh
