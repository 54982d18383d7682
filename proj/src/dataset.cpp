#include "usmesh/dataset.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <set>

namespace usmesh {
namespace {

using nn::Shape;
using nn::Tensor;

void copy_slice(const Grid3<float>& grid, int z, Tensor<float>& dst, int channel) {
  auto plane = dst.image(0).row(channel);
  const auto src = grid.slice(z);
  for (int y = 0; y < grid.ny(); ++y)
    for (int x = 0; x < grid.nx(); ++x) plane(static_cast<Eigen::Index>(y) * grid.nx() + x) = src(y, x);
}

/// Inverse map of an output pixel to its source position.
struct InverseMap {
  double cx, cy, c, s;
  int w, h;
  Transform t;

  Eigen::Vector2d operator()(int x, int y) const {
    const double px = x - t.dx - cx;
    const double py = y - t.dy - cy;
    double sx = c * px + s * py + cx;
    double sy = -s * px + c * py + cy;
    if (t.flip_x) sx = (w - 1) - sx;
    if (t.flip_y) sy = (h - 1) - sy;
    return {sx, sy};
  }
};

float sample_bilinear(const float* plane, int w, int h, double x, double y) {
  const double fx = std::floor(x), fy = std::floor(y);
  const int x0 = static_cast<int>(fx), y0 = static_cast<int>(fy);
  const double ax = x - fx, ay = y - fy;
  auto at = [&](int xx, int yy) -> double {
    return (xx < 0 || yy < 0 || xx >= w || yy >= h) ? 0.0 : plane[static_cast<std::size_t>(yy) * w + xx];
  };
  const double v = (1 - ay) * ((1 - ax) * at(x0, y0) + ax * at(x0 + 1, y0)) +
                   ay * ((1 - ax) * at(x0, y0 + 1) + ax * at(x0 + 1, y0 + 1));
  return static_cast<float>(std::clamp(v, 0.0, 1.0));
}

float sample_nearest(const float* plane, int w, int h, double x, double y) {
  const long xi = std::lround(x), yi = std::lround(y);
  if (xi < 0 || yi < 0 || xi >= w || yi >= h) return 0.0f;
  return std::clamp(plane[static_cast<std::size_t>(yi) * w + xi], 0.0f, 1.0f);
}

Tensor<float> warp(const Tensor<float>& src, const InverseMap& map, Interpolation interp) {
  const Shape s = src.shape();
  Tensor<float> out(s);
  for (int n = 0; n < s.n; ++n) {
    for (int ch = 0; ch < s.c; ++ch) {
      const float* plane = src.data() + src.offset(n, ch, 0, 0);
      for (int y = 0; y < s.h; ++y) {
        for (int x = 0; x < s.w; ++x) {
          const Eigen::Vector2d p = map(x, y);
          out(n, ch, y, x) = interp == Interpolation::Bilinear ? sample_bilinear(plane, s.w, s.h, p.x(), p.y())
                                                               : sample_nearest(plane, s.w, s.h, p.x(), p.y());
        }
      }
    }
  }
  return out;
}

}  // namespace

std::vector<Sample> make_samples(const Volume& volume, const LabelVolume& label, SelectionScheme scheme,
                                 int volume_id, std::vector<std::string>* warnings) {
  const Extent e = volume.extent();
  if (!(label.data.extent() == e)) throw ShapeError("volume and label grids differ");
  if (e.nz < 3) throw ArgumentError("need at least 3 slices, got " + std::to_string(e.nz));

  std::vector<Sample> out;
  for (int c = 1; c <= e.nz - 2; ++c) {
    if (scheme == SelectionScheme::SE2) {
      bool touches = false;
      for (int z = c - 1; z <= c + 1 && !touches; ++z) touches = (label.data.slice(z) != 0.0f).any();
      if (!touches) continue;
    }
    Sample s;
    s.input = Tensor<float>(Shape{1, 3, e.ny, e.nx});
    s.target = Tensor<float>(Shape{1, 3, e.ny, e.nx});
    for (int k = 0; k < 3; ++k) {
      copy_slice(volume.data, c - 1 + k, s.input, k);
      copy_slice(label.data, c - 1 + k, s.target, k);
    }
    s.volume_id = volume_id;
    s.center_slice = c;
    out.push_back(std::move(s));
  }
  if (out.empty() && warnings)
    warnings->push_back("volume " + std::to_string(volume_id) + ": no slice window contains the mesh");
  return out;
}

Sample apply_transform(const Sample& sample, const Transform& t, Interpolation target_interpolation) {
  const Shape s = sample.input.shape();
  const double a = t.angle_deg * std::numbers::pi / 180.0;
  const InverseMap map{(s.w - 1) / 2.0, (s.h - 1) / 2.0, std::cos(a), std::sin(a), s.w, s.h, t};
  Sample out;
  out.input = warp(sample.input, map, Interpolation::Bilinear);
  out.target = warp(sample.target, map, target_interpolation);
  out.volume_id = sample.volume_id;
  out.center_slice = sample.center_slice;
  return out;
}

Transform draw_transform(const AugmentPolicy& policy, int epoch, std::uint64_t seed) {
  Transform t;
  if (!policy.enabled) return t;
  std::mt19937_64 rng(seed);
  const bool can_translate = policy.max_translation > 0;
  const bool can_mirror = policy.mirror_x || policy.mirror_y;
  const bool can_rotate = policy.max_rotation > 0 && epoch >= policy.reorientation_start_epoch;

  auto translate = [&] {
    std::uniform_int_distribution<int> d(-policy.max_translation, policy.max_translation);
    t.dx = d(rng);
    t.dy = d(rng);
  };
  auto rotate = [&] {
    std::uniform_real_distribution<double> d(-policy.max_rotation, policy.max_rotation);
    t.angle_deg = d(rng);
  };

  if (policy.combine == CombineMode::Simultaneous) {
    if (can_translate) translate();
    std::bernoulli_distribution coin(0.5);
    if (policy.mirror_x) t.flip_x = coin(rng);
    if (policy.mirror_y) t.flip_y = coin(rng);
    if (can_rotate) rotate();
    return t;
  }

  enum Family { Translate, Mirror, Rotate };
  std::vector<Family> families;
  if (can_translate) families.push_back(Translate);
  if (can_mirror) families.push_back(Mirror);
  if (can_rotate) families.push_back(Rotate);
  if (families.empty()) return t;
  std::uniform_int_distribution<std::size_t> pick(0, families.size() - 1);
  switch (families[pick(rng)]) {
    case Translate: translate(); break;
    case Rotate: rotate(); break;
    case Mirror:
      if (policy.mirror_x && policy.mirror_y) {
        (std::bernoulli_distribution(0.5)(rng) ? t.flip_x : t.flip_y) = true;
      } else {
        (policy.mirror_x ? t.flip_x : t.flip_y) = true;
      }
      break;
  }
  return t;
}

Sample augment(const Sample& sample, const AugmentPolicy& policy, int epoch, std::uint64_t seed) {
  const Transform t = draw_transform(policy, epoch, seed);
  if (t == Transform{}) return sample;
  return apply_transform(sample, t, policy.target_interpolation);
}

Split split_volumes(const std::vector<int>& ids, int val_id, int test_id) {
  const std::set<int> unique(ids.begin(), ids.end());
  if (unique.size() != ids.size()) throw ArgumentError("volume ids must be distinct");
  if (val_id == test_id) throw ArgumentError("validation and test volume must differ");
  if (!unique.count(val_id)) throw ArgumentError("validation volume " + std::to_string(val_id) + " not in ids");
  if (!unique.count(test_id)) throw ArgumentError("test volume " + std::to_string(test_id) + " not in ids");
  Split split;
  split.val_id = val_id;
  split.test_id = test_id;
  for (int id : ids)
    if (id != val_id && id != test_id) split.train_ids.push_back(id);
  return split;
}

}  // namespace usmesh
