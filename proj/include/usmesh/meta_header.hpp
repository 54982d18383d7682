#pragma once

#include <array>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace usmesh {

enum class ElementType { UInt16 };

/// MetaImage (.mhd) header. The thirteen tags of a typical ultrasound scan
/// header are modelled explicitly; anything else survives in `extra_tags`.
struct MetaHeader {
  std::string object_type = "Image";
  int ndims = 3;
  bool binary_data = true;
  bool byte_order_msb = false;
  bool compressed_data = false;
  std::array<double, 9> transform_matrix{1, 0, 0, 0, 1, 0, 0, 0, 1};
  std::array<double, 3> offset{0, 0, 0};
  std::array<double, 3> center_of_rotation{0, 0, 0};
  /// Carried through unchanged; never interpreted.
  std::string anatomical_orientation = "RAI";
  std::array<double, 3> element_spacing{1, 1, 1};
  std::array<int, 3> dim_size{0, 0, 0};
  ElementType element_type = ElementType::UInt16;
  std::string data_file;
  std::vector<std::pair<std::string, std::string>> extra_tags;

  bool operator==(const MetaHeader&) const = default;
};

/// Parses `Key = Value` lines. Tag order does not matter.
/// Throws ParseError for a missing required tag (NDims, DimSize,
/// ElementSpacing, ElementType, ElementDataFile) or a malformed value, and
/// UnsupportedTypeError for any ElementType other than MET_USHORT.
MetaHeader parse_meta(std::string_view text);

/// Emits the known tags in canonical order followed by the extra tags.
std::string write_meta(const MetaHeader& header);

/// Shortest round-trip decimal form, with a trailing ".0" for integral values
/// ("1.0", "0.49479", "0.3125").
std::string format_real(double value);

}  // namespace usmesh
