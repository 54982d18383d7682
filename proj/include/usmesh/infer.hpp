#pragma once

#include "usmesh/encoder.hpp"
#include "usmesh/nets/net.hpp"
#include "usmesh/volume.hpp"

#include <functional>
#include <string>
#include <vector>

namespace usmesh {

/// Numeric codes follow the AG field of run tags: mean 0, max 1, single 2.
enum class Aggregation { Mean = 0, Max = 1, Single = 2 };

std::string to_string(Aggregation agg);
Aggregation parse_aggregation(const std::string& name);

struct ThresholdRule {
  enum class Kind { Absolute, FractionOfMax };
  Kind kind = Kind::Absolute;
  double value = 0.5;

  static ThresholdRule absolute(double t) { return {Kind::Absolute, t}; }
  static ThresholdRule fraction(double f) { return {Kind::FractionOfMax, f}; }
};

/// How raw network outputs become probabilities before thresholding.
enum class OutputMapping {
  Raw,        // use the activation output as-is
  TanhToUnit  // (x + 1) / 2
};

/// Maps a (n, 3, H, W) batch of slice triplets to (n, 3, H, W) predictions.
using WindowModel = std::function<nn::Tensor<float>(const nn::Tensor<float>&)>;

/// Slides the 3-slice window over centres c in [1, Z-2] and aggregates the
/// up to three predictions each slice receives. In single mode interior
/// slices take the centre channel of their own window; slices 0 and Z-1 take
/// the outer channel of the nearest window. Results do not depend on
/// `batch_size`. Throws ShapeError when the model output shape differs from
/// its input, ArgumentError for fewer than 3 slices.
Grid3<float> predict_volume(const WindowModel& model, const Volume& volume, Aggregation agg,
                            int batch_size = 8);

/// Net overload; throws ShapeError if the volume plane is not the net's input
/// plane.
Grid3<float> predict_volume(nn::Net<float>& net, const Volume& volume, Aggregation agg, int batch_size = 8,
                            OutputMapping mapping = OutputMapping::Raw);

struct ResolvedThreshold {
  double t = 0;
  std::vector<std::string> warnings;
};

/// Absolute rules return their value; fraction rules scale the global maximum.
/// A fraction rule on an all-zero map yields t = 0 and a warning.
ResolvedThreshold resolve_threshold(const Grid3<float>& prob, const ThresholdRule& rule);

PointCloud reconstruct(const WindowModel& model, const Volume& volume, Aggregation agg,
                       const ThresholdRule& rule, const Vec3& spacing, std::vector<std::string>* warnings = nullptr);
PointCloud reconstruct(nn::Net<float>& net, const Volume& volume, Aggregation agg, const ThresholdRule& rule,
                       const Vec3& spacing, OutputMapping mapping = OutputMapping::Raw,
                       std::vector<std::string>* warnings = nullptr);

}  // namespace usmesh
