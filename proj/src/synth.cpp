#include "usmesh/synth.hpp"

#include "usmesh/error.hpp"

#include <cmath>
#include <numbers>
#include <random>

namespace usmesh {
namespace {

struct PipeShape {
  double cx, cy;      // axis position at the first pipe slice (voxels)
  double ax, ay;      // axis wobble amplitude
  double r0, dr;      // inner radius and its wobble
  double period;      // wobble period in slices
  double phase;
  double wall;

  double phase_at(double z) const { return 2 * std::numbers::pi * z / period + phase; }
  double centre_x(double z) const { return cx + ax * std::sin(phase_at(z)); }
  double centre_y(double z) const { return cy + ay * std::cos(phase_at(z)); }
  double inner(double z) const { return r0 + dr * std::sin(2 * phase_at(z)); }
  double outer(double z) const { return inner(z) + wall; }
};

PipeShape draw_shape(const PipeOptions& o, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(-1, 1);
  PipeShape s{};
  s.cx = (o.extent.nx - 1) / 2.0 + 2 * u(rng);
  s.cy = (o.extent.ny - 1) / 2.0 + 2 * u(rng);
  s.ax = 2 + u(rng);
  s.ay = 2 + u(rng);
  s.r0 = 11 + u(rng);
  s.dr = 1.5 + 0.5 * u(rng);
  s.period = o.extent.nz * (1 + 0.3 * u(rng));
  s.phase = std::numbers::pi * u(rng);
  s.wall = o.wall;
  const double reach = s.r0 + s.dr + s.wall + std::max(s.ax, s.ay) + 2;
  if (s.cx - reach < 0 || s.cx + reach > o.extent.nx - 1 || s.cy - reach < 0 || s.cy + reach > o.extent.ny - 1)
    throw ArgumentError("pipe does not fit in the requested extent");
  return s;
}

void add_wall(std::vector<Vec3>& verts, std::vector<Eigen::Vector3i>& faces, const PipeShape& s,
              const PipeOptions& o, bool outer) {
  const double sx = o.spacing.x(), sy = o.spacing.y(), sz = o.spacing.z();
  const double z0 = o.z_margin, z1 = o.extent.nz - 1 - o.z_margin;
  const double step = 0.5 * std::min({sx, sy, sz});
  const int rings = static_cast<int>(std::ceil((z1 - z0) * sz / step)) + 1;
  const double r_max = (s.r0 + s.dr + (outer ? s.wall : 0)) * std::max(sx, sy);
  const int around = static_cast<int>(std::ceil(2 * std::numbers::pi * r_max / step));
  const int base = static_cast<int>(verts.size());
  for (int k = 0; k < rings; ++k) {
    const double z = z0 + (z1 - z0) * k / (rings - 1);
    const double r = outer ? s.outer(z) : s.inner(z);
    for (int j = 0; j < around; ++j) {
      const double a = 2 * std::numbers::pi * j / around;
      verts.emplace_back((s.centre_x(z) + r * std::cos(a)) * sx, (s.centre_y(z) + r * std::sin(a)) * sy, z * sz);
    }
  }
  for (int k = 0; k + 1 < rings; ++k) {
    for (int j = 0; j < around; ++j) {
      const int a = base + k * around + j, b = base + k * around + (j + 1) % around;
      const int c = a + around, d = b + around;
      if (outer) {
        faces.emplace_back(a, b, d);
        faces.emplace_back(a, d, c);
      } else {
        faces.emplace_back(a, d, b);
        faces.emplace_back(a, c, d);
      }
    }
  }
}

double gauss(double d, double sigma) { return std::exp(-0.5 * d * d / (sigma * sigma)); }

double smooth_step(double d) { return 1 / (1 + std::exp(-2 * d)); }

}  // namespace

SyntheticCase make_pipe(const PipeOptions& o, int id) {
  if (o.extent.nz < 2 * o.z_margin + 2) throw ArgumentError("too few slices for the pipe margins");
  std::mt19937_64 rng(o.seed * 0x9e3779b97f4a7c15ULL + static_cast<std::uint64_t>(id));
  const PipeShape s = draw_shape(o, rng);

  SyntheticCase out;
  Volume& v = out.volume;
  v.spacing = o.spacing;
  v.data = Grid3<float>(o.extent);
  v.header = make_header(o.extent, o.spacing, "");
  std::normal_distribution<double> noise(0, o.noise);
  const double z0 = o.z_margin, z1 = o.extent.nz - 1 - o.z_margin;
  for (int z = 0; z < o.extent.nz; ++z) {
    const bool in_pipe = z >= z0 && z <= z1;
    for (int y = 0; y < o.extent.ny; ++y) {
      for (int x = 0; x < o.extent.nx; ++x) {
        double value = 0.1;
        if (in_pipe) {
          const double rho = std::hypot(x - s.centre_x(z), y - s.centre_y(z));
          const double din = rho - s.inner(z), dout = s.outer(z) - rho;
          value += 0.3 * smooth_step(din) * smooth_step(dout);
          value += 0.5 * (gauss(din, o.ridge_sigma) + gauss(dout, o.ridge_sigma));
        }
        value += noise(rng);
        v.data(z, y, x) = static_cast<float>(std::clamp(value, 0.0, 1.0) * 4000.0);
      }
    }
  }

  std::vector<Vec3> verts;
  std::vector<Eigen::Vector3i> faces;
  add_wall(verts, faces, s, o, false);
  add_wall(verts, faces, s, o, true);
  out.reference.vertices.resize(3, static_cast<Eigen::Index>(verts.size()));
  for (std::size_t i = 0; i < verts.size(); ++i) out.reference.vertices.col(static_cast<Eigen::Index>(i)) = verts[i];
  out.reference.faces.resize(3, static_cast<Eigen::Index>(faces.size()));
  for (std::size_t i = 0; i < faces.size(); ++i) out.reference.faces.col(static_cast<Eigen::Index>(i)) = faces[i];
  return out;
}

void write_pipe_dataset(const std::filesystem::path& dir, int count, const PipeOptions& options) {
  if (count < 1) throw ArgumentError("count must be positive");
  std::filesystem::create_directories(dir);
  for (int id = 1; id <= count; ++id) {
    const SyntheticCase c = make_pipe(options, id);
    write_volume(dir / ("vol" + std::to_string(id) + ".mhd"), c.volume);
    write_ply_file(dir / ("ref" + std::to_string(id) + ".ply"), c.reference);
  }
}

}  // namespace usmesh
