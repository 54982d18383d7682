#include "usmesh/infer.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <limits>

namespace usmesh {

std::string to_string(Aggregation agg) {
  switch (agg) {
    case Aggregation::Mean: return "mean";
    case Aggregation::Max: return "max";
    case Aggregation::Single: return "single";
  }
  return "mean";
}

Aggregation parse_aggregation(const std::string& name) {
  if (name == "mean" || name == "0") return Aggregation::Mean;
  if (name == "max" || name == "1") return Aggregation::Max;
  if (name == "single" || name == "2") return Aggregation::Single;
  throw ArgumentError("unknown aggregation '" + name + "'");
}

Grid3<float> predict_volume(const WindowModel& model, const Volume& volume, Aggregation agg, int batch_size) {
  const Extent e = volume.extent();
  if (e.nz < 3) throw ArgumentError("need at least 3 slices, got " + std::to_string(e.nz));
  batch_size = std::max(1, batch_size);
  const int plane = e.nx * e.ny;

  Grid3<float> acc(e, agg == Aggregation::Max ? -std::numeric_limits<float>::infinity() : 0.0f);
  Grid3<float> count(Extent{1, 1, e.nz});

  auto accumulate = [&](int z, const float* src) {
    auto dst = acc.slice(z);
    Eigen::Map<const Eigen::Array<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>> s(src, e.ny, e.nx);
    if (agg == Aggregation::Max) dst = dst.max(s);
    else dst += s;
    count(z, 0, 0) += 1;
  };

  for (int c0 = 1; c0 <= e.nz - 2; c0 += batch_size) {
    const int c1 = std::min(e.nz - 2, c0 + batch_size - 1);
    nn::Tensor<float> batch(nn::Shape{c1 - c0 + 1, 3, e.ny, e.nx});
    for (int c = c0; c <= c1; ++c)
      for (int k = 0; k < 3; ++k)
        std::copy_n(volume.data.slice(c - 1 + k).data(), plane, batch.data() + batch.offset(c - c0, k, 0, 0));
    const nn::Tensor<float> out = model(batch);
    if (out.shape() != batch.shape())
      throw ShapeError("model returned " + out.shape().str() + " for input " + batch.shape().str());
    for (int c = c0; c <= c1; ++c) {
      const int n = c - c0;
      for (int k = 0; k < 3; ++k) {
        const int z = c - 1 + k;
        bool take = true;
        if (agg == Aggregation::Single)
          take = (k == 1) || (z == 0 && c == 1) || (z == e.nz - 1 && c == e.nz - 2);
        if (take) accumulate(z, out.data() + out.offset(n, k, 0, 0));
      }
    }
  }
  if (agg != Aggregation::Max)
    for (int z = 0; z < e.nz; ++z) acc.slice(z) /= count(z, 0, 0);
  return acc;
}

Grid3<float> predict_volume(nn::Net<float>& net, const Volume& volume, Aggregation agg, int batch_size,
                            OutputMapping mapping) {
  const auto& s = net.spec();
  if (volume.extent().nx != s.width || volume.extent().ny != s.height || s.in_channels != 3 || s.out_channels != 3)
    throw ShapeError("volume plane " + std::to_string(volume.extent().ny) + "x" + std::to_string(volume.extent().nx) +
                     " does not match the net input " + std::to_string(s.height) + "x" + std::to_string(s.width));
  WindowModel model = [&net, mapping](const nn::Tensor<float>& x) {
    nn::Tensor<float> y = net.predict(x);
    if (mapping == OutputMapping::TanhToUnit) y.array() = (y.array() + 1.0f) * 0.5f;
    return y;
  };
  return predict_volume(model, volume, agg, batch_size);
}

ResolvedThreshold resolve_threshold(const Grid3<float>& prob, const ThresholdRule& rule) {
  if (prob.size() == 0) throw ArgumentError("empty probability volume");
  ResolvedThreshold r;
  if (rule.kind == ThresholdRule::Kind::Absolute) {
    if (rule.value < 0 || rule.value > 1) throw ArgumentError("absolute threshold must lie in [0, 1]");
    r.t = rule.value;
    return r;
  }
  if (rule.value <= 0 || rule.value > 1) throw ArgumentError("threshold fraction must lie in (0, 1]");
  const double peak = static_cast<double>(prob.array().maxCoeff());
  if (peak <= 0) {
    r.warnings.push_back("degenerate threshold: probability map is all zero, using t = 0");
    r.t = 0;
    return r;
  }
  // The float product can round above the peak itself for f = 1.
  r.t = std::min(rule.value * peak, peak);
  return r;
}

PointCloud reconstruct(const WindowModel& model, const Volume& volume, Aggregation agg, const ThresholdRule& rule,
                       const Vec3& spacing, std::vector<std::string>* warnings) {
  const Grid3<float> prob = predict_volume(model, volume, agg);
  const auto t = resolve_threshold(prob, rule);
  if (warnings) warnings->insert(warnings->end(), t.warnings.begin(), t.warnings.end());
  return decode_points(prob, t.t, spacing);
}

PointCloud reconstruct(nn::Net<float>& net, const Volume& volume, Aggregation agg, const ThresholdRule& rule,
                       const Vec3& spacing, OutputMapping mapping, std::vector<std::string>* warnings) {
  const Grid3<float> prob = predict_volume(net, volume, agg, 8, mapping);
  const auto t = resolve_threshold(prob, rule);
  if (warnings) warnings->insert(warnings->end(), t.warnings.begin(), t.warnings.end());
  return decode_points(prob, t.t, spacing);
}

}  // namespace usmesh
