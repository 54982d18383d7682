#include "usmesh/volume.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <sstream>

namespace usmesh {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

std::vector<std::byte> read_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  std::vector<std::byte> out(raw.size());
  std::transform(raw.begin(), raw.end(), out.begin(), [](char c) { return std::byte(c); });
  return out;
}

void write_bytes(const std::filesystem::path& path, std::span<const std::byte> bytes) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

Extent extent_of(const MetaHeader& h) { return {h.dim_size[0], h.dim_size[1], h.dim_size[2]}; }

}  // namespace

Volume load_volume(const MetaHeader& header, std::span<const std::byte> payload) {
  if (header.compressed_data) throw UnsupportedTypeError("compressed MetaImage payloads are not supported");
  const Extent extent = extent_of(header);
  const std::size_t expected = extent.voxels() * 2;
  if (payload.size() != expected) throw TruncationError(expected, payload.size());

  Volume v;
  v.header = header;
  v.spacing = Vec3(header.element_spacing[0], header.element_spacing[1], header.element_spacing[2]);
  v.data = Grid3<float>(extent);
  auto& out = v.data.array();
  const auto* bytes = reinterpret_cast<const std::uint8_t*>(payload.data());
  for (std::size_t i = 0; i < extent.voxels(); ++i) {
    const std::uint8_t b0 = bytes[2 * i];
    const std::uint8_t b1 = bytes[2 * i + 1];
    const std::uint16_t value = header.byte_order_msb ? static_cast<std::uint16_t>(b0 << 8 | b1)
                                                      : static_cast<std::uint16_t>(b1 << 8 | b0);
    out[static_cast<Eigen::Index>(i)] = static_cast<float>(value);
  }
  return v;
}

std::vector<std::byte> encode_payload(const Volume& volume) {
  const auto& data = volume.data.array();
  std::vector<std::byte> out(static_cast<std::size_t>(data.size()) * 2);
  for (Eigen::Index i = 0; i < data.size(); ++i) {
    const double clamped = std::clamp(std::round(static_cast<double>(data[i])), 0.0, 65535.0);
    const auto value = static_cast<std::uint16_t>(clamped);
    const auto hi = std::byte(value >> 8);
    const auto lo = std::byte(value & 0xff);
    out[2 * i] = volume.header.byte_order_msb ? hi : lo;
    out[2 * i + 1] = volume.header.byte_order_msb ? lo : hi;
  }
  return out;
}

Volume downsample(const Volume& volume, int factor, DownsampleMethod method) {
  if (factor < 1) throw ArgumentError("down-sampling factor must be >= 1, got " + std::to_string(factor));
  if (factor == 1) return volume;

  const Extent in = volume.extent();
  const Extent out_extent{in.nx / factor, in.ny / factor, in.nz};
  Volume out;
  out.data = Grid3<float>(out_extent);
  for (int z = 0; z < out_extent.nz; ++z) {
    for (int y = 0; y < out_extent.ny; ++y) {
      for (int x = 0; x < out_extent.nx; ++x) {
        if (method == DownsampleMethod::Stride) {
          out.data(z, y, x) = volume.data(z, y * factor, x * factor);
        } else {
          double sum = 0;
          for (int dy = 0; dy < factor; ++dy)
            for (int dx = 0; dx < factor; ++dx) sum += volume.data(z, y * factor + dy, x * factor + dx);
          out.data(z, y, x) = static_cast<float>(sum / (factor * factor));
        }
      }
    }
  }
  out.spacing = Vec3(volume.spacing.x() * factor, volume.spacing.y() * factor, volume.spacing.z());
  out.header = volume.header;
  out.header.dim_size = {out_extent.nx, out_extent.ny, out_extent.nz};
  out.header.element_spacing = {out.spacing.x(), out.spacing.y(), out.spacing.z()};
  return out;
}

Volume normalize(const Volume& volume) {
  Volume out = volume;
  auto& a = out.data.array();
  if (a.size() == 0) return out;
  const float lo = a.minCoeff();
  const float hi = a.maxCoeff();
  if (!(hi > lo)) {
    a.setZero();
    return out;
  }
  const double range = static_cast<double>(hi) - static_cast<double>(lo);
  for (Eigen::Index i = 0; i < a.size(); ++i) {
    a[i] = static_cast<float>((static_cast<double>(a[i]) - lo) / range);
  }
  return out;
}

MetaHeader make_header(const Extent& extent, const Vec3& spacing, std::string data_file) {
  MetaHeader h;
  h.dim_size = {extent.nx, extent.ny, extent.nz};
  h.element_spacing = {spacing.x(), spacing.y(), spacing.z()};
  h.data_file = std::move(data_file);
  return h;
}

MetaHeader read_meta_file(const std::filesystem::path& mhd_path) {
  return parse_meta(read_text(mhd_path));
}

Volume read_volume(const std::filesystem::path& mhd_path) {
  MetaHeader header = read_meta_file(mhd_path);
  const auto raw_path = mhd_path.parent_path() / header.data_file;
  const auto bytes = read_bytes(raw_path);
  return load_volume(header, bytes);
}

void write_volume(const std::filesystem::path& mhd_path, const Volume& volume) {
  MetaHeader header = volume.header;
  const Extent e = volume.extent();
  header.dim_size = {e.nx, e.ny, e.nz};
  header.element_spacing = {volume.spacing.x(), volume.spacing.y(), volume.spacing.z()};
  auto raw_name = mhd_path.filename();
  raw_name.replace_extension(".raw");
  header.data_file = raw_name.string();

  Volume tmp = volume;
  tmp.header = header;
  write_bytes(mhd_path.parent_path() / header.data_file, encode_payload(tmp));
  std::ofstream out(mhd_path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + mhd_path.string());
  out << write_meta(header);
}

void write_unit_volume(const std::filesystem::path& mhd_path, const Grid3<float>& values,
                       const Vec3& spacing) {
  Volume v;
  v.spacing = spacing;
  v.data = Grid3<float>(values.extent());
  v.data.array() = (values.array().max(0.0f).min(1.0f) * 65535.0f).round();
  v.header = make_header(values.extent(), spacing, "");
  write_volume(mhd_path, v);
}

Volume read_unit_volume(const std::filesystem::path& mhd_path) {
  Volume v = read_volume(mhd_path);
  v.data.array() /= 65535.0f;
  return v;
}

}  // namespace usmesh
