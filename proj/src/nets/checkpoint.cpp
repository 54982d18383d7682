#include "usmesh/error.hpp"
#include "usmesh/nets/net.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

namespace usmesh::nn {
namespace {

static_assert(std::endian::native == std::endian::little, "checkpoint I/O assumes a little-endian host");

constexpr char kMagic[8] = {'U', 'S', 'M', 'C', 'K', 'P', 'T', '1'};
constexpr std::uint8_t kFloat32 = 0;

void put_u32(std::string& out, std::uint32_t v) {
  char b[4];
  std::memcpy(b, &v, 4);
  out.append(b, 4);
}

class Reader {
 public:
  explicit Reader(std::string data) : data_(std::move(data)) {}

  void take(void* dst, std::size_t n) {
    if (pos_ + n > data_.size()) throw FormatError("checkpoint truncated at byte " + std::to_string(pos_));
    std::memcpy(dst, data_.data() + pos_, n);
    pos_ += n;
  }
  std::uint32_t u32() {
    std::uint32_t v;
    take(&v, 4);
    return v;
  }
  std::string str() {
    std::string s(u32(), '\0');
    take(s.data(), s.size());
    return s;
  }

 private:
  std::string data_;
  std::size_t pos_ = 0;
};

std::string read_all(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open checkpoint " + path.string());
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

Reader open_checkpoint(const std::filesystem::path& path, NetSpec& spec) {
  Reader r(read_all(path));
  char magic[8];
  r.take(magic, 8);
  if (std::memcmp(magic, kMagic, 8) != 0) throw FormatError(path.string() + " is not a checkpoint");
  spec = parse_spec_string(r.str());
  return r;
}

}  // namespace

void save_checkpoint(const std::filesystem::path& path, const Net<float>& net) {
  std::string out(kMagic, 8);
  const std::string spec = spec_string(net.spec());
  put_u32(out, static_cast<std::uint32_t>(spec.size()));
  out += spec;
  put_u32(out, static_cast<std::uint32_t>(net.parameters().size() + net.buffers().size()));
  for (const auto* list : {&net.parameters(), &net.buffers()}) {
    for (const auto& p : *list) {
      const Tensor<float>& t = p.var->value;
      put_u32(out, static_cast<std::uint32_t>(p.name.size()));
      out += p.name;
      out.push_back(static_cast<char>(kFloat32));
      put_u32(out, 4);
      for (int d : {t.shape().n, t.shape().c, t.shape().h, t.shape().w}) put_u32(out, static_cast<std::uint32_t>(d));
      out.append(reinterpret_cast<const char*>(t.data()), static_cast<std::size_t>(t.size()) * sizeof(float));
    }
  }
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream f(path, std::ios::binary);
  if (!f.write(out.data(), static_cast<std::streamsize>(out.size())))
    throw Error("cannot write checkpoint " + path.string());
}

NetSpec read_checkpoint_spec(const std::filesystem::path& path) {
  NetSpec spec;
  open_checkpoint(path, spec);
  return spec;
}

void load_checkpoint(const std::filesystem::path& path, Net<float>& net) {
  NetSpec stored;
  Reader r = open_checkpoint(path, stored);
  if (!(stored == net.spec()))
    throw SpecMismatchError("checkpoint spec '" + spec_string(stored) + "' does not match net spec '" +
                            spec_string(net.spec()) + "'");
  const std::uint32_t count = r.u32();
  if (count != net.parameters().size() + net.buffers().size())
    throw IntegrityError("checkpoint holds " + std::to_string(count) + " tensors, net expects " +
                         std::to_string(net.parameters().size() + net.buffers().size()));
  std::vector<Tensor<float>> state;
  for (const auto* list : {&net.parameters(), &net.buffers()}) {
    for (const auto& p : *list) {
      const std::string name = r.str();
      if (name != p.name) throw IntegrityError("checkpoint tensor '" + name + "' where '" + p.name + "' expected");
      std::uint8_t dtype;
      r.take(&dtype, 1);
      if (dtype != kFloat32) throw FormatError("unsupported checkpoint dtype " + std::to_string(dtype));
      if (r.u32() != 4) throw FormatError("checkpoint tensor '" + name + "' is not 4-dimensional");
      Shape s;
      s.n = static_cast<int>(r.u32());
      s.c = static_cast<int>(r.u32());
      s.h = static_cast<int>(r.u32());
      s.w = static_cast<int>(r.u32());
      if (s != p.var->value.shape())
        throw IntegrityError("checkpoint tensor '" + name + "' has shape " + s.str() + ", expected " +
                             p.var->value.shape().str());
      Tensor<float> t(s);
      r.take(t.data(), static_cast<std::size_t>(t.size()) * sizeof(float));
      state.push_back(std::move(t));
    }
  }
  net.restore(state);
}

Net<float> load_checkpoint(const std::filesystem::path& path) {
  Net<float> net(read_checkpoint_spec(path), 0);
  load_checkpoint(path, net);
  return net;
}

}  // namespace usmesh::nn
