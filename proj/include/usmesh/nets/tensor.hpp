#pragma once

#include <Eigen/Core>

#include <string>

namespace usmesh::nn {

/// Batch x channels x height x width.
struct Shape {
  int n = 0;
  int c = 0;
  int h = 0;
  int w = 0;

  Eigen::Index size() const {
    return static_cast<Eigen::Index>(n) * c * h * w;
  }
  Eigen::Index plane() const { return static_cast<Eigen::Index>(h) * w; }
  bool operator==(const Shape&) const = default;
  std::string str() const {
    return "(" + std::to_string(n) + "," + std::to_string(c) + "," + std::to_string(h) + "," +
           std::to_string(w) + ")";
  }
};

/// Dense channel-first 4D array. Each image is a (c x h*w) row-major block,
/// which is what the GEMM-based convolutions consume.
template <typename Scalar>
class Tensor {
 public:
  using Array = Eigen::Array<Scalar, Eigen::Dynamic, 1>;
  using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
  using MatrixMap = Eigen::Map<Matrix>;
  using ConstMatrixMap = Eigen::Map<const Matrix>;

  Tensor() = default;
  explicit Tensor(Shape shape, Scalar fill = Scalar(0))
      : shape_(shape), data_(Array::Constant(shape.size(), fill)) {}

  const Shape& shape() const { return shape_; }
  Eigen::Index size() const { return data_.size(); }
  bool empty() const { return data_.size() == 0; }

  Array& array() { return data_; }
  const Array& array() const { return data_; }
  Scalar* data() { return data_.data(); }
  const Scalar* data() const { return data_.data(); }

  Eigen::Index offset(int n, int c, int y, int x) const {
    return ((static_cast<Eigen::Index>(n) * shape_.c + c) * shape_.h + y) * shape_.w + x;
  }
  Scalar& operator()(int n, int c, int y, int x) { return data_[offset(n, c, y, x)]; }
  const Scalar& operator()(int n, int c, int y, int x) const { return data_[offset(n, c, y, x)]; }

  /// Image `n` as a (c x h*w) matrix.
  MatrixMap image(int n) {
    return MatrixMap(data_.data() + offset(n, 0, 0, 0), shape_.c, shape_.plane());
  }
  ConstMatrixMap image(int n) const {
    return ConstMatrixMap(data_.data() + offset(n, 0, 0, 0), shape_.c, shape_.plane());
  }

  /// Parameters are stored with n = rows of the weight matrix; this view
  /// flattens everything after the first axis.
  MatrixMap rows() { return MatrixMap(data_.data(), shape_.n, shape_.c * shape_.plane()); }
  ConstMatrixMap rows() const {
    return ConstMatrixMap(data_.data(), shape_.n, shape_.c * shape_.plane());
  }

  template <typename U>
  Tensor<U> cast() const {
    Tensor<U> out(shape_);
    out.array() = data_.template cast<U>();
    return out;
  }

 private:
  Shape shape_;
  Array data_;
};

}  // namespace usmesh::nn
