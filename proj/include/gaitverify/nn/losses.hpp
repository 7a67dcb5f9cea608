#pragma once

#include "gaitverify/nn/tensor.hpp"

#include <cmath>
#include <span>

namespace gaitverify::nn {

template <typename Scalar>
struct LossResult {
  double loss = 0.0;
  Tensor<Scalar> grad;
};

/// Row-wise softmax of a B x K tensor.
template <typename Scalar>
Tensor<Scalar> softmax(const Tensor<Scalar>& logits) {
  if (logits.rank() != 2) throw InvalidInput("softmax: logits must be B x K");
  Tensor<Scalar> p(logits.shape());
  const auto z = logits.matrix();
  auto pm = p.matrix();
  for (Index b = 0; b < z.rows(); ++b) {
    pm.row(b) = (z.row(b).array() - z.row(b).maxCoeff()).exp().matrix();
    pm.row(b) /= pm.row(b).sum();
  }
  return p;
}

/// Mean categorical cross-entropy over the batch; grad = (softmax - onehot) / B.
template <typename Scalar>
LossResult<Scalar> softmax_crossentropy(const Tensor<Scalar>& logits, std::span<const int> labels) {
  if (logits.rank() != 2) throw InvalidInput("softmax_crossentropy: logits must be B x K");
  const Index batch = logits.dim(0), classes = logits.dim(1);
  if (static_cast<Index>(labels.size()) != batch) {
    throw InvalidInput("softmax_crossentropy: " + std::to_string(labels.size()) + " labels for batch of " +
                       std::to_string(batch));
  }
  LossResult<Scalar> out{0.0, softmax(logits)};
  const auto z = logits.matrix();
  auto g = out.grad.matrix();
  for (Index b = 0; b < batch; ++b) {
    const int y = labels[static_cast<std::size_t>(b)];
    if (y < 0 || y >= classes) {
      throw InvalidInput("softmax_crossentropy: label " + std::to_string(y) + " outside [0, " +
                         std::to_string(classes) + ")");
    }
    const double zmax = static_cast<double>(z.row(b).maxCoeff());
    double sum = 0.0;
    for (Index k = 0; k < classes; ++k) sum += std::exp(static_cast<double>(z(b, k)) - zmax);
    out.loss += zmax + std::log(sum) - static_cast<double>(z(b, y));
    g(b, y) -= Scalar(1);
  }
  out.loss /= static_cast<double>(batch);
  out.grad.data() /= Scalar(batch);
  return out;
}

/// Mean squared error over all elements, gradient taken with respect to the prediction.
template <typename Scalar>
LossResult<Scalar> mse_loss(const Tensor<Scalar>& target, const Tensor<Scalar>& prediction) {
  if (target.shape() != prediction.shape()) {
    throw InvalidInput("mse_loss: shapes " + shape_string(target.shape()) + " and " +
                       shape_string(prediction.shape()) + " differ");
  }
  const auto n = static_cast<double>(target.size());
  const Vector<Scalar> diff = prediction.data() - target.data();
  LossResult<Scalar> out;
  out.loss = diff.template cast<double>().squaredNorm() / n;
  out.grad = Tensor<Scalar>(target.shape(), diff * Scalar(2.0 / n));
  return out;
}

}  // namespace gaitverify::nn
