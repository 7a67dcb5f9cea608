#pragma once

#include "gaitverify/core.hpp"

#include <functional>
#include <numeric>
#include <string>
#include <vector>

namespace gaitverify::nn {

using Shape = std::vector<Index>;

inline Index shape_size(const Shape& shape) {
  return std::accumulate(shape.begin(), shape.end(), Index{1}, std::multiplies<>());
}

inline std::string shape_string(const Shape& shape) {
  std::string s = "[";
  for (std::size_t i = 0; i < shape.size(); ++i) {
    if (i) s += "x";
    s += std::to_string(shape[i]);
  }
  return s + "]";
}

/// Dense row-major array. The trailing dimension is the "channel" axis: matrix()
/// views the data as (product of leading dims) x (last dim), which is how every
/// layer consumes activations of shape B x T x C or B x D.
template <typename Scalar>
class Tensor {
 public:
  using MatrixMap = Eigen::Map<RowMatrix<Scalar>>;
  using ConstMatrixMap = Eigen::Map<const RowMatrix<Scalar>>;

  Tensor() = default;

  explicit Tensor(Shape shape) : shape_(std::move(shape)), data_(Vector<Scalar>::Zero(shape_size(shape_))) {
    check_shape();
  }

  Tensor(Shape shape, Vector<Scalar> data) : shape_(std::move(shape)), data_(std::move(data)) {
    check_shape();
    if (data_.size() != shape_size(shape_)) {
      throw InvalidInput("tensor data size " + std::to_string(data_.size()) + " does not match shape " +
                         shape_string(shape_));
    }
  }

  const Shape& shape() const { return shape_; }
  Index rank() const { return static_cast<Index>(shape_.size()); }
  Index dim(Index axis) const { return shape_.at(static_cast<std::size_t>(axis)); }
  Index size() const { return data_.size(); }

  Vector<Scalar>& data() { return data_; }
  const Vector<Scalar>& data() const { return data_; }

  Index rows() const { return shape_.empty() ? 0 : size() / shape_.back(); }
  Index cols() const { return shape_.empty() ? 0 : shape_.back(); }

  MatrixMap matrix() { return MatrixMap(data_.data(), rows(), cols()); }
  ConstMatrixMap matrix() const { return ConstMatrixMap(data_.data(), rows(), cols()); }

  void set_zero() { data_.setZero(); }

  /// Same data, new shape with equal element count.
  Tensor reshaped(Shape shape) const { return Tensor(std::move(shape), data_); }

  template <typename Other>
  Tensor<Other> cast() const {
    return Tensor<Other>(shape_, data_.template cast<Other>());
  }

 private:
  void check_shape() const {
    for (Index d : shape_) {
      if (d <= 0) throw InvalidInput("tensor dimensions must be positive, got " + shape_string(shape_));
    }
  }

  Shape shape_;
  Vector<Scalar> data_;
};

/// A trainable tensor together with the gradient of the current loss.
template <typename Scalar>
struct Parameter {
  std::string name;
  Tensor<Scalar> value;
  Tensor<Scalar> grad;

  Parameter() = default;
  Parameter(std::string n, Tensor<Scalar> v) : name(std::move(n)), value(std::move(v)), grad(value.shape()) {}
};

}  // namespace gaitverify::nn
