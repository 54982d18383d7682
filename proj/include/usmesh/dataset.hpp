#pragma once

#include "usmesh/encoder.hpp"
#include "usmesh/nets/tensor.hpp"
#include "usmesh/volume.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace usmesh {

/// Three consecutive slices (c-1, c, c+1) and their labels, each stored as a
/// (1, 3, H, W) tensor.
struct Sample {
  nn::Tensor<float> input;
  nn::Tensor<float> target;
  int volume_id = 0;
  int center_slice = 0;
};

enum class SelectionScheme {
  SE1,  // every window
  SE2,  // only windows whose target touches the mesh
};

/// One sample per centre slice c in [1, Z-2]. Throws ArgumentError for fewer
/// than three slices and ShapeError when the volume and label grids differ.
/// An empty SE2 result appends a message to `warnings`.
std::vector<Sample> make_samples(const Volume& volume, const LabelVolume& label, SelectionScheme scheme,
                                 int volume_id, std::vector<std::string>* warnings = nullptr);

enum class CombineMode { Simultaneous, Exclusive };
enum class Interpolation { Bilinear, Nearest };

struct AugmentPolicy {
  bool enabled = true;
  int max_translation = 10;    // pixels
  double max_rotation = 15.0;  // degrees
  bool mirror_x = true;
  bool mirror_y = true;
  CombineMode combine = CombineMode::Exclusive;
  /// Rotations are withheld before this epoch.
  int reorientation_start_epoch = 0;
  Interpolation target_interpolation = Interpolation::Bilinear;

  bool operator==(const AugmentPolicy&) const = default;
};

/// Planar rigid transform: mirror, rotate about the image centre, translate.
struct Transform {
  int dx = 0;
  int dy = 0;
  double angle_deg = 0.0;
  bool flip_x = false;
  bool flip_y = false;

  bool operator==(const Transform&) const = default;
};

/// Applies `t` to every channel of input and target. Outside samples are zero;
/// interpolated values are clamped to [0, 1].
Sample apply_transform(const Sample& sample, const Transform& t,
                       Interpolation target_interpolation = Interpolation::Bilinear);

/// Draws a transform for `epoch` from `seed`. Exclusive mode picks one family
/// among translate, mirror and (from the reorientation epoch on) rotate;
/// simultaneous mode composes every enabled family.
Transform draw_transform(const AugmentPolicy& policy, int epoch, std::uint64_t seed);

Sample augment(const Sample& sample, const AugmentPolicy& policy, int epoch, std::uint64_t seed);

struct Split {
  std::vector<int> train_ids;
  int val_id = 0;
  int test_id = 0;
};

/// Throws ArgumentError when ids repeat, val == test, or either is missing.
Split split_volumes(const std::vector<int>& ids, int val_id, int test_id);

}  // namespace usmesh
