#include "usmesh/meta_header.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <cctype>
#include <charconv>
#include <map>
#include <sstream>

namespace usmesh {
namespace {

std::string_view trim(std::string_view s) {
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.front()))) s.remove_prefix(1);
  while (!s.empty() && std::isspace(static_cast<unsigned char>(s.back()))) s.remove_suffix(1);
  return s;
}

std::vector<std::string_view> split_ws(std::string_view s) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < s.size()) {
    while (i < s.size() && std::isspace(static_cast<unsigned char>(s[i]))) ++i;
    std::size_t j = i;
    while (j < s.size() && !std::isspace(static_cast<unsigned char>(s[j]))) ++j;
    if (j > i) out.push_back(s.substr(i, j - i));
    i = j;
  }
  return out;
}

template <typename T>
T parse_number(std::string_view tag, std::string_view token) {
  T value{};
  auto [ptr, ec] = std::from_chars(token.data(), token.data() + token.size(), value);
  if (ec != std::errc{} || ptr != token.data() + token.size()) {
    throw ParseError("malformed value for " + std::string(tag) + ": '" + std::string(token) + "'");
  }
  return value;
}

template <typename T, std::size_t N>
std::array<T, N> parse_array(std::string_view tag, std::string_view value) {
  auto tokens = split_ws(value);
  if (tokens.size() != N) {
    throw ParseError(std::string(tag) + " expects " + std::to_string(N) + " values, got " +
                     std::to_string(tokens.size()));
  }
  std::array<T, N> out{};
  for (std::size_t i = 0; i < N; ++i) out[i] = parse_number<T>(tag, tokens[i]);
  return out;
}

bool parse_bool(std::string_view tag, std::string_view value) {
  std::string lower(value);
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "true") return true;
  if (lower == "false") return false;
  throw ParseError("malformed boolean for " + std::string(tag) + ": '" + std::string(value) + "'");
}

const char* bool_text(bool b) { return b ? "True" : "False"; }

template <typename Range>
std::string join_reals(const Range& values) {
  std::string out;
  for (double v : values) {
    if (!out.empty()) out += ' ';
    out += format_real(v);
  }
  return out;
}

}  // namespace

std::string format_real(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  std::string s(buf, ptr);
  if (s.find_first_of(".eEn") == std::string::npos) s += ".0";
  return s;
}

MetaHeader parse_meta(std::string_view text) {
  std::map<std::string, std::string, std::less<>> known;
  MetaHeader h;
  static const std::array<std::string_view, 13> kKnown{
      "ObjectType",      "NDims",    "BinaryData",       "BinaryDataByteOrderMSB",
      "CompressedData",  "TransformMatrix", "Offset",    "CenterOfRotation",
      "AnatomicalOrientation", "ElementSpacing", "DimSize", "ElementType",
      "ElementDataFile"};

  std::size_t pos = 0;
  while (pos <= text.size()) {
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = trim(text.substr(pos, eol - pos));
    pos = eol + 1;
    if (line.empty()) continue;
    std::size_t eq = line.find('=');
    if (eq == std::string_view::npos) {
      throw ParseError("expected 'Key = Value', got '" + std::string(line) + "'");
    }
    std::string key(trim(line.substr(0, eq)));
    std::string value(trim(line.substr(eq + 1)));
    if (std::find(kKnown.begin(), kKnown.end(), key) != kKnown.end()) {
      known[key] = value;
    } else {
      h.extra_tags.emplace_back(key, value);
    }
  }

  auto require = [&](std::string_view tag) -> const std::string& {
    auto it = known.find(tag);
    if (it == known.end()) throw ParseError("missing required tag " + std::string(tag));
    return it->second;
  };
  auto optional = [&](std::string_view tag) -> const std::string* {
    auto it = known.find(tag);
    return it == known.end() ? nullptr : &it->second;
  };

  h.ndims = parse_number<int>("NDims", require("NDims"));
  if (h.ndims != 3) throw ParseError("NDims must be 3, got " + std::to_string(h.ndims));
  h.dim_size = parse_array<int, 3>("DimSize", require("DimSize"));
  h.element_spacing = parse_array<double, 3>("ElementSpacing", require("ElementSpacing"));
  h.data_file = require("ElementDataFile");
  const std::string& type = require("ElementType");
  if (type != "MET_USHORT") throw UnsupportedTypeError("unsupported ElementType " + type);
  h.element_type = ElementType::UInt16;

  if (auto* v = optional("ObjectType")) h.object_type = *v;
  if (auto* v = optional("BinaryData")) h.binary_data = parse_bool("BinaryData", *v);
  if (auto* v = optional("BinaryDataByteOrderMSB"))
    h.byte_order_msb = parse_bool("BinaryDataByteOrderMSB", *v);
  if (auto* v = optional("CompressedData")) h.compressed_data = parse_bool("CompressedData", *v);
  if (auto* v = optional("TransformMatrix"))
    h.transform_matrix = parse_array<double, 9>("TransformMatrix", *v);
  if (auto* v = optional("Offset")) h.offset = parse_array<double, 3>("Offset", *v);
  if (auto* v = optional("CenterOfRotation"))
    h.center_of_rotation = parse_array<double, 3>("CenterOfRotation", *v);
  if (auto* v = optional("AnatomicalOrientation")) h.anatomical_orientation = *v;

  for (int d : h.dim_size)
    if (d <= 0) throw ParseError("DimSize entries must be positive");
  for (double s : h.element_spacing)
    if (!(s > 0)) throw ParseError("ElementSpacing entries must be positive");
  if (h.data_file.empty()) throw ParseError("ElementDataFile is empty");
  return h;
}

std::string write_meta(const MetaHeader& h) {
  std::ostringstream out;
  out << "ObjectType = " << h.object_type << '\n'
      << "NDims = " << h.ndims << '\n'
      << "BinaryData = " << bool_text(h.binary_data) << '\n'
      << "BinaryDataByteOrderMSB = " << bool_text(h.byte_order_msb) << '\n'
      << "CompressedData = " << bool_text(h.compressed_data) << '\n'
      << "TransformMatrix = " << join_reals(h.transform_matrix) << '\n'
      << "Offset = " << join_reals(h.offset) << '\n'
      << "CenterOfRotation = " << join_reals(h.center_of_rotation) << '\n'
      << "AnatomicalOrientation = " << h.anatomical_orientation << '\n'
      << "ElementSpacing = " << join_reals(h.element_spacing) << '\n'
      << "DimSize = " << h.dim_size[0] << ' ' << h.dim_size[1] << ' ' << h.dim_size[2] << '\n'
      << "ElementType = MET_USHORT\n"
      << "ElementDataFile = " << h.data_file << '\n';
  for (const auto& [key, value] : h.extra_tags) out << key << " = " << value << '\n';
  return out.str();
}

}  // namespace usmesh
