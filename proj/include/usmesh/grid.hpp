#pragma once

#include <Eigen/Core>

#include <array>
#include <cstddef>

namespace usmesh {

using Vec3 = Eigen::Vector3d;

/// Grid extent in voxels, stored in (x, y, z) order like a MetaImage DimSize.
struct Extent {
  int nx = 0;
  int ny = 0;
  int nz = 0;

  std::size_t voxels() const {
    return static_cast<std::size_t>(nx) * static_cast<std::size_t>(ny) *
           static_cast<std::size_t>(nz);
  }
  bool operator==(const Extent&) const = default;
};

/// Dense 3D array indexed (z, y, x); x varies fastest, matching the raw
/// payload order of a MetaImage file.
template <typename T>
class Grid3 {
 public:
  using Scalar = T;
  using Storage = Eigen::Array<T, Eigen::Dynamic, 1>;

  Grid3() = default;
  explicit Grid3(Extent extent, T fill = T(0))
      : extent_(extent), data_(Storage::Constant(static_cast<Eigen::Index>(extent.voxels()), fill)) {}

  const Extent& extent() const { return extent_; }
  int nx() const { return extent_.nx; }
  int ny() const { return extent_.ny; }
  int nz() const { return extent_.nz; }
  std::size_t size() const { return static_cast<std::size_t>(data_.size()); }

  std::size_t index(int z, int y, int x) const {
    return (static_cast<std::size_t>(z) * extent_.ny + y) * extent_.nx + x;
  }

  T& operator()(int z, int y, int x) { return data_[static_cast<Eigen::Index>(index(z, y, x))]; }
  const T& operator()(int z, int y, int x) const {
    return data_[static_cast<Eigen::Index>(index(z, y, x))];
  }

  bool contains(int z, int y, int x) const {
    return z >= 0 && y >= 0 && x >= 0 && z < extent_.nz && y < extent_.ny && x < extent_.nx;
  }

  Storage& array() { return data_; }
  const Storage& array() const { return data_; }

  /// One axial slice as a (ny x nx) row-major view.
  auto slice(int z) {
    return Eigen::Map<Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data_.data() + index(z, 0, 0), extent_.ny, extent_.nx);
  }
  auto slice(int z) const {
    return Eigen::Map<const Eigen::Array<T, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(
        data_.data() + index(z, 0, 0), extent_.ny, extent_.nx);
  }

  template <typename U>
  Grid3<U> cast() const {
    Grid3<U> out;
    out.extent_ = extent_;
    out.data_ = data_.template cast<U>();
    return out;
  }

 private:
  template <typename U>
  friend class Grid3;

  Extent extent_;
  Storage data_;
};

}  // namespace usmesh
