#pragma once

#include "usmesh/mesh.hpp"
#include "usmesh/volume.hpp"

#include <cstdint>
#include <filesystem>
#include <vector>

namespace usmesh {

/// Noisy hollow pipe along z. The centre line and inner radius wobble
/// sinusoidally with z; lengths are in voxels unless noted.
struct PipeOptions {
  Extent extent{64, 64, 96};
  Vec3 spacing{0.5, 0.5, 0.5};
  double wall = 10;         // wall thickness
  double ridge_sigma = 1;   // width of the bright interface echoes
  double noise = 0.08;      // additive Gaussian noise on a [0, 1] scale
  int z_margin = 8;         // empty slices at each end
  std::uint64_t seed = 0;
};

struct SyntheticCase {
  Volume volume;  // uint16-range intensities
  Mesh reference; // inner and outer wall surfaces in mm
};

SyntheticCase make_pipe(const PipeOptions& options, int id);

/// Writes `vol<id>.mhd` / `vol<id>.raw` / `ref<id>.ply` for ids 1..count.
void write_pipe_dataset(const std::filesystem::path& dir, int count, const PipeOptions& options);

}  // namespace usmesh
