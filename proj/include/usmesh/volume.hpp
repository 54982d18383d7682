#pragma once

#include "usmesh/grid.hpp"
#include "usmesh/meta_header.hpp"

#include <cstddef>
#include <filesystem>
#include <span>
#include <vector>

namespace usmesh {

/// Scalar volume with physical spacing (mm, x/y/z order) and its provenance
/// header. Raw integer intensities are kept as-is until `normalize`.
struct Volume {
  Grid3<float> data;
  Vec3 spacing{1, 1, 1};
  MetaHeader header;

  const Extent& extent() const { return data.extent(); }
};

enum class DownsampleMethod { Stride, Average };

/// Decodes a little- or big-endian uint16 payload (per header) into a volume.
/// Throws TruncationError when the payload size does not match DimSize.
Volume load_volume(const MetaHeader& header, std::span<const std::byte> payload);

/// Re-encodes the voxel values as uint16 in the header's byte order. Values
/// are rounded and clamped to [0, 65535].
std::vector<std::byte> encode_payload(const Volume& volume);

/// Integer in-plane (x, y) down-sampling; the slice count is unchanged.
Volume downsample(const Volume& volume, int factor,
                  DownsampleMethod method = DownsampleMethod::Stride);

/// Affine rescale to [0, 1]. A constant volume maps to all zeros.
Volume normalize(const Volume& volume);

/// Header describing a fresh uint16 volume on the given grid.
MetaHeader make_header(const Extent& extent, const Vec3& spacing, std::string data_file);

// File helpers. `ElementDataFile` is resolved relative to the header's folder.
MetaHeader read_meta_file(const std::filesystem::path& mhd_path);
Volume read_volume(const std::filesystem::path& mhd_path);
void write_volume(const std::filesystem::path& mhd_path, const Volume& volume);

/// Stores a [0, 1] field as uint16 counts of 1/65535 (probability and label
/// volumes); `read_unit_volume` inverts the scaling.
void write_unit_volume(const std::filesystem::path& mhd_path, const Grid3<float>& values,
                       const Vec3& spacing);
Volume read_unit_volume(const std::filesystem::path& mhd_path);

}  // namespace usmesh
