#include "usmesh/mesh.hpp"

#include "usmesh/error.hpp"

#include <algorithm>
#include <charconv>
#include <cstdint>
#include <cctype>
#include <cstring>
#include <fstream>
#include <iterator>
#include <optional>
#include <sstream>
#include <string>
#include <string_view>

namespace usmesh {
namespace {

enum class PlyType { Int8, UInt8, Int16, UInt16, Int32, UInt32, Float32, Float64 };

std::optional<PlyType> type_from_name(std::string_view name) {
  if (name == "char" || name == "int8") return PlyType::Int8;
  if (name == "uchar" || name == "uint8") return PlyType::UInt8;
  if (name == "short" || name == "int16") return PlyType::Int16;
  if (name == "ushort" || name == "uint16") return PlyType::UInt16;
  if (name == "int" || name == "int32") return PlyType::Int32;
  if (name == "uint" || name == "uint32") return PlyType::UInt32;
  if (name == "float" || name == "float32") return PlyType::Float32;
  if (name == "double" || name == "float64") return PlyType::Float64;
  return std::nullopt;
}

std::size_t type_size(PlyType t) {
  switch (t) {
    case PlyType::Int8:
    case PlyType::UInt8: return 1;
    case PlyType::Int16:
    case PlyType::UInt16: return 2;
    case PlyType::Int32:
    case PlyType::UInt32:
    case PlyType::Float32: return 4;
    case PlyType::Float64: return 8;
  }
  return 0;
}

struct Property {
  std::string name;
  PlyType type = PlyType::Float32;
  bool is_list = false;
  PlyType count_type = PlyType::UInt8;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

enum class Encoding { Ascii, BinaryLE };

std::vector<std::string_view> tokens_of(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) out.push_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

class BinaryCursor {
 public:
  BinaryCursor(std::span<const std::byte> bytes, std::size_t pos) : bytes_(bytes), pos_(pos) {}

  double read(PlyType t) {
    const std::size_t n = type_size(t);
    if (pos_ + n > bytes_.size()) throw FormatError("PLY body truncated");
    const auto* p = reinterpret_cast<const unsigned char*>(bytes_.data() + pos_);
    pos_ += n;
    // Hosts are little-endian (x86/ARM); the body is little-endian by contract.
    switch (t) {
      case PlyType::Int8: { std::int8_t v; std::memcpy(&v, p, 1); return v; }
      case PlyType::UInt8: return p[0];
      case PlyType::Int16: { std::int16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::UInt16: { std::uint16_t v; std::memcpy(&v, p, 2); return v; }
      case PlyType::Int32: { std::int32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::UInt32: { std::uint32_t v; std::memcpy(&v, p, 4); return v; }
      case PlyType::Float32: { float v; std::memcpy(&v, p, 4); return v; }
      case PlyType::Float64: { double v; std::memcpy(&v, p, 8); return v; }
    }
    return 0;
  }

 private:
  std::span<const std::byte> bytes_;
  std::size_t pos_;
};

class AsciiCursor {
 public:
  AsciiCursor(std::span<const std::byte> bytes, std::size_t pos)
      : text_(reinterpret_cast<const char*>(bytes.data()), bytes.size()), pos_(pos) {}

  double read(PlyType type) {
    while (pos_ < text_.size() && std::isspace(static_cast<unsigned char>(text_[pos_]))) ++pos_;
    if (pos_ >= text_.size()) throw FormatError("PLY body truncated");
    std::size_t end = pos_;
    while (end < text_.size() && !std::isspace(static_cast<unsigned char>(text_[end]))) ++end;
    double value = 0;
    std::from_chars_result res;
    if (type == PlyType::Float32) {
      float narrow = 0;
      res = std::from_chars(text_.data() + pos_, text_.data() + end, narrow);
      value = narrow;
    } else {
      res = std::from_chars(text_.data() + pos_, text_.data() + end, value);
    }
    auto [ptr, ec] = res;
    if (ec != std::errc{} || ptr != text_.data() + end) {
      throw FormatError("malformed PLY number '" + std::string(text_.substr(pos_, end - pos_)) + "'");
    }
    pos_ = end;
    return value;
  }

 private:
  std::string_view text_;
  std::size_t pos_;
};

template <typename Cursor>
Mesh read_body(Cursor cursor, const std::vector<Element>& elements) {
  Mesh mesh;
  std::vector<std::array<int, 3>> faces;
  bool have_vertex = false;
  for (const Element& el : elements) {
    if (el.name == "vertex") {
      have_vertex = true;
      int ix = -1, iy = -1, iz = -1;
      for (std::size_t p = 0; p < el.properties.size(); ++p) {
        const auto& prop = el.properties[p];
        if (prop.is_list) continue;
        if (prop.name == "x") ix = static_cast<int>(p);
        if (prop.name == "y") iy = static_cast<int>(p);
        if (prop.name == "z") iz = static_cast<int>(p);
      }
      if (ix < 0 || iy < 0 || iz < 0) throw FormatError("vertex element lacks x/y/z properties");
      mesh.vertices.resize(3, static_cast<Eigen::Index>(el.count));
      for (std::size_t i = 0; i < el.count; ++i) {
        for (std::size_t p = 0; p < el.properties.size(); ++p) {
          const auto& prop = el.properties[p];
          if (prop.is_list) {
            const auto n = static_cast<std::size_t>(cursor.read(prop.count_type));
            for (std::size_t k = 0; k < n; ++k) cursor.read(prop.type);
            continue;
          }
          const double v = cursor.read(prop.type);
          const auto col = static_cast<Eigen::Index>(i);
          if (static_cast<int>(p) == ix) mesh.vertices(0, col) = v;
          if (static_cast<int>(p) == iy) mesh.vertices(1, col) = v;
          if (static_cast<int>(p) == iz) mesh.vertices(2, col) = v;
        }
      }
    } else if (el.name == "face") {
      for (std::size_t i = 0; i < el.count; ++i) {
        for (const auto& prop : el.properties) {
          if (!prop.is_list) {
            cursor.read(prop.type);
            continue;
          }
          const auto n = static_cast<std::size_t>(cursor.read(prop.count_type));
          std::vector<int> idx(n);
          for (std::size_t k = 0; k < n; ++k) idx[k] = static_cast<int>(cursor.read(prop.type));
          if (prop.name != "vertex_indices" && prop.name != "vertex_index") continue;
          for (std::size_t k = 2; k < n; ++k) faces.push_back({idx[0], idx[k - 1], idx[k]});
        }
      }
    } else {
      for (std::size_t i = 0; i < el.count; ++i) {
        for (const auto& prop : el.properties) {
          if (prop.is_list) {
            const auto n = static_cast<std::size_t>(cursor.read(prop.count_type));
            for (std::size_t k = 0; k < n; ++k) cursor.read(prop.type);
          } else {
            cursor.read(prop.type);
          }
        }
      }
    }
  }
  if (!have_vertex) throw FormatError("PLY has no vertex element");

  mesh.faces.resize(3, static_cast<Eigen::Index>(faces.size()));
  for (std::size_t f = 0; f < faces.size(); ++f) {
    for (int k = 0; k < 3; ++k) {
      const int idx = faces[f][static_cast<std::size_t>(k)];
      if (idx < 0 || idx >= mesh.vertices.cols()) {
        throw IntegrityError("face " + std::to_string(f) + " references vertex " + std::to_string(idx) +
                             " of " + std::to_string(mesh.vertices.cols()));
      }
      mesh.faces(k, static_cast<Eigen::Index>(f)) = idx;
    }
  }
  return mesh;
}

template <typename T>
void append_raw(std::vector<std::byte>& out, T value) {
  std::byte buf[sizeof(T)];
  std::memcpy(buf, &value, sizeof(T));
  out.insert(out.end(), buf, buf + sizeof(T));
}

void append_text(std::vector<std::byte>& out, std::string_view s) {
  const auto* p = reinterpret_cast<const std::byte*>(s.data());
  out.insert(out.end(), p, p + s.size());
}

std::string float_text(float v) {
  char buf[32];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, ptr);
}

}  // namespace

Mesh read_ply(std::span<const std::byte> bytes) {
  const std::string_view text(reinterpret_cast<const char*>(bytes.data()), bytes.size());
  std::size_t pos = 0;
  auto next_line = [&]() -> std::string_view {
    if (pos >= text.size()) throw FormatError("PLY header not terminated by end_header");
    std::size_t eol = text.find('\n', pos);
    if (eol == std::string_view::npos) eol = text.size();
    std::string_view line = text.substr(pos, eol - pos);
    pos = eol + 1;
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    return line;
  };

  if (next_line() != "ply") throw FormatError("missing 'ply' magic");
  std::optional<Encoding> encoding;
  std::vector<Element> elements;
  for (;;) {
    const auto line = next_line();
    const auto tok = tokens_of(line);
    if (tok.empty()) continue;
    if (tok[0] == "end_header") break;
    if (tok[0] == "comment" || tok[0] == "obj_info") continue;
    if (tok[0] == "format") {
      if (tok.size() < 2) throw FormatError("malformed format line");
      if (tok[1] == "ascii") encoding = Encoding::Ascii;
      else if (tok[1] == "binary_little_endian") encoding = Encoding::BinaryLE;
      else throw FormatError("unsupported PLY format '" + std::string(tok[1]) + "'");
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw FormatError("malformed element line");
      Element el;
      el.name = std::string(tok[1]);
      auto [ptr, ec] = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), el.count);
      if (ec != std::errc{}) throw FormatError("malformed element count");
      elements.push_back(std::move(el));
    } else if (tok[0] == "property") {
      if (elements.empty()) throw FormatError("property before any element");
      Property prop;
      if (tok.size() == 5 && tok[1] == "list") {
        auto ct = type_from_name(tok[2]);
        auto vt = type_from_name(tok[3]);
        if (!ct || !vt) throw FormatError("unknown PLY list type");
        prop.is_list = true;
        prop.count_type = *ct;
        prop.type = *vt;
        prop.name = std::string(tok[4]);
      } else if (tok.size() == 3) {
        auto t = type_from_name(tok[1]);
        if (!t) throw FormatError("unknown PLY type '" + std::string(tok[1]) + "'");
        prop.type = *t;
        prop.name = std::string(tok[2]);
      } else {
        throw FormatError("malformed property line");
      }
      elements.back().properties.push_back(std::move(prop));
    } else {
      throw FormatError("unexpected PLY header line '" + std::string(line) + "'");
    }
  }
  if (!encoding) throw FormatError("PLY header lacks a format line");
  if (*encoding == Encoding::Ascii) return read_body(AsciiCursor(bytes, pos), elements);
  return read_body(BinaryCursor(bytes, pos), elements);
}

std::vector<std::byte> write_ply(const Mesh& mesh, bool ascii) {
  if (mesh.vertices.cols() == 0) throw FormatError("cannot write a PLY without vertices");
  std::ostringstream header;
  header << "ply\n"
         << "format " << (ascii ? "ascii" : "binary_little_endian") << " 1.0\n"
         << "element vertex " << mesh.vertices.cols() << "\n"
         << "property float x\nproperty float y\nproperty float z\n";
  if (mesh.faces.cols() > 0) {
    header << "element face " << mesh.faces.cols() << "\n"
           << "property list uchar int vertex_indices\n";
  }
  header << "end_header\n";

  std::vector<std::byte> out;
  append_text(out, header.str());
  if (ascii) {
    std::string body;
    for (Eigen::Index i = 0; i < mesh.vertices.cols(); ++i) {
      body += float_text(static_cast<float>(mesh.vertices(0, i))) + ' ' +
              float_text(static_cast<float>(mesh.vertices(1, i))) + ' ' +
              float_text(static_cast<float>(mesh.vertices(2, i))) + '\n';
    }
    for (Eigen::Index f = 0; f < mesh.faces.cols(); ++f) {
      body += "3 " + std::to_string(mesh.faces(0, f)) + ' ' + std::to_string(mesh.faces(1, f)) + ' ' +
              std::to_string(mesh.faces(2, f)) + '\n';
    }
    append_text(out, body);
  } else {
    out.reserve(out.size() + static_cast<std::size_t>(mesh.vertices.cols()) * 12 +
                static_cast<std::size_t>(mesh.faces.cols()) * 13);
    for (Eigen::Index i = 0; i < mesh.vertices.cols(); ++i)
      for (int k = 0; k < 3; ++k) append_raw(out, static_cast<float>(mesh.vertices(k, i)));
    for (Eigen::Index f = 0; f < mesh.faces.cols(); ++f) {
      append_raw(out, std::uint8_t{3});
      for (int k = 0; k < 3; ++k) append_raw(out, static_cast<std::int32_t>(mesh.faces(k, f)));
    }
  }
  return out;
}

Mesh read_ply_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ArgumentError("cannot open " + path.string());
  std::vector<char> raw((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return read_ply(std::as_bytes(std::span<const char>(raw)));
}

void write_ply_file(const std::filesystem::path& path, const Mesh& mesh, bool ascii) {
  const auto bytes = write_ply(mesh, ascii);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw ArgumentError("cannot write " + path.string());
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
}

}  // namespace usmesh
