#include "usmesh/metrics.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <limits>
#include <numeric>
#include <random>

namespace usmesh {
namespace {

// Shared by both backends so they agree to the last bit.
inline double squared_distance(const Eigen::Vector3d& a, const Eigen::Vector3d& b) {
  const double dx = a.x() - b.x(), dy = a.y() - b.y(), dz = a.z() - b.z();
  return dx * dx + dy * dy + dz * dz;
}

double mean_nearest_brute(const Eigen::Matrix3Xd& from, const Eigen::Matrix3Xd& to) {
  double sum = 0;
  for (Eigen::Index i = 0; i < from.cols(); ++i) {
    double best = std::numeric_limits<double>::infinity();
    const Eigen::Vector3d q = from.col(i);
    for (Eigen::Index j = 0; j < to.cols(); ++j) best = std::min(best, squared_distance(q, to.col(j)));
    sum += best;
  }
  return sum / static_cast<double>(from.cols());
}

double mean_nearest_tree(const Eigen::Matrix3Xd& from, const Eigen::Matrix3Xd& to) {
  const KdTree tree(to);
  double sum = 0;
  for (Eigen::Index i = 0; i < from.cols(); ++i) sum += tree.nearest_squared(from.col(i));
  return sum / static_cast<double>(from.cols());
}

}  // namespace

KdTree::KdTree(const Eigen::Matrix3Xd& points) : points_(points) {
  std::vector<int> idx(static_cast<std::size_t>(points.cols()));
  std::iota(idx.begin(), idx.end(), 0);
  nodes_.reserve(idx.size());
  root_ = build(idx, 0, static_cast<int>(idx.size()), 0);
}

int KdTree::build(std::vector<int>& idx, int begin, int end, int depth) {
  if (begin >= end) return -1;
  // Split on the axis of largest spread.
  Eigen::Vector3d lo = Eigen::Vector3d::Constant(std::numeric_limits<double>::infinity());
  Eigen::Vector3d hi = -lo;
  for (int i = begin; i < end; ++i) {
    lo = lo.cwiseMin(points_.col(idx[static_cast<std::size_t>(i)]));
    hi = hi.cwiseMax(points_.col(idx[static_cast<std::size_t>(i)]));
  }
  int axis = 0;
  (hi - lo).maxCoeff(&axis);
  const int mid = begin + (end - begin) / 2;
  std::nth_element(idx.begin() + begin, idx.begin() + mid, idx.begin() + end,
                   [&](int a, int b) { return points_(axis, a) < points_(axis, b); });
  const int id = static_cast<int>(nodes_.size());
  nodes_.push_back({idx[static_cast<std::size_t>(mid)], axis, -1, -1});
  const int left = build(idx, begin, mid, depth + 1);
  const int right = build(idx, mid + 1, end, depth + 1);
  nodes_[static_cast<std::size_t>(id)].left = left;
  nodes_[static_cast<std::size_t>(id)].right = right;
  return id;
}

void KdTree::search(int node, const Eigen::Vector3d& q, double& best) const {
  while (node >= 0) {
    const Node& n = nodes_[static_cast<std::size_t>(node)];
    best = std::min(best, squared_distance(q, points_.col(n.point)));
    const double diff = q[n.axis] - points_(n.axis, n.point);
    const int near = diff < 0 ? n.left : n.right;
    const int far = diff < 0 ? n.right : n.left;
    if (far >= 0 && diff * diff <= best) search(far, q, best);
    node = near;
  }
}

double KdTree::nearest_squared(const Eigen::Vector3d& q) const {
  double best = std::numeric_limits<double>::infinity();
  search(root_, q, best);
  return best;
}

double chamfer_exact(const PointCloud& s, const PointCloud& t, ChamferBackend backend) {
  if (s.empty() || t.empty()) throw UndefinedDistanceError("chamfer distance of an empty point cloud");
  if (backend == ChamferBackend::BruteForce)
    return mean_nearest_brute(s.points, t.points) + mean_nearest_brute(t.points, s.points);
  return mean_nearest_tree(s.points, t.points) + mean_nearest_tree(t.points, s.points);
}

Eigen::Matrix3Xd sample_points(const Eigen::Matrix3Xd& points, int count, std::uint64_t seed) {
  const auto n = static_cast<std::size_t>(points.cols());
  const auto k = std::min(n, static_cast<std::size_t>(std::max(count, 0)));
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0);
  std::mt19937_64 rng(seed);
  for (std::size_t i = 0; i < k; ++i) {
    std::uniform_int_distribution<std::size_t> pick(i, n - 1);
    std::swap(idx[i], idx[pick(rng)]);
  }
  Eigen::Matrix3Xd out(3, static_cast<Eigen::Index>(k));
  for (std::size_t i = 0; i < k; ++i) out.col(static_cast<Eigen::Index>(i)) = points.col(static_cast<Eigen::Index>(idx[i]));
  return out;
}

ChamferResult chamfer_sampled(const PointCloud& s, const PointCloud& t, int v, std::uint64_t seed) {
  if (v < 1) throw ArgumentError("sample size v must be >= 1");
  ChamferResult r;
  r.seed = seed;
  const bool whole = s.size() <= v && t.size() <= v;
  if (whole) {
    r.value = chamfer_exact(s, t);
    return r;
  }
  if (s.empty() || t.empty()) throw UndefinedDistanceError("chamfer distance of an empty point cloud");
  // Independent streams for the two clouds.
  const PointCloud ss{s.size() > v ? sample_points(s.points, v, seed) : s.points};
  const PointCloud ts{t.size() > v ? sample_points(t.points, v, seed ^ 0x5bd1e9955bd1e995ULL) : t.points};
  r.value = chamfer_exact(ss, ts);
  r.v_used = v;
  return r;
}

}  // namespace usmesh
