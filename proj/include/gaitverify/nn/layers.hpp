#pragma once

#include "gaitverify/nn/tensor.hpp"

#include <cmath>
#include <cstdint>
#include <random>
#include <string>

namespace gaitverify::nn {

enum class Mode { train, infer };

namespace detail {

inline void require(bool ok, const std::string& what) {
  if (!ok) throw InvalidInput(what);
}

inline thread_local std::uint64_t* relu_pattern_sink = nullptr;

/// Rows of x.matrix() that feed kernel tap k at output positions [lo, hi).
struct TapRange {
  Index lo;
  Index hi;
};

inline TapRange tap_range(Index k, Index left_pad, Index length) {
  return {std::max<Index>(0, left_pad - k), std::min(length, length + left_pad - k)};
}

/// Unfolds a B x T x C input into (B*T) x (K*C) patches with "same" zero padding.
template <typename Scalar>
RowMatrix<Scalar> im2col(const Tensor<Scalar>& x, Index kernel) {
  const Index batch = x.dim(0), length = x.dim(1), channels = x.dim(2);
  const Index left = (kernel - 1) / 2;
  RowMatrix<Scalar> cols = RowMatrix<Scalar>::Zero(batch * length, kernel * channels);
  const auto xm = x.matrix();
  for (Index b = 0; b < batch; ++b) {
    for (Index k = 0; k < kernel; ++k) {
      const auto [lo, hi] = tap_range(k, left, length);
      if (hi <= lo) continue;
      cols.block(b * length + lo, k * channels, hi - lo, channels) =
          xm.block(b * length + lo + k - left, 0, hi - lo, channels);
    }
  }
  return cols;
}

template <typename Scalar>
void col2im_add(const RowMatrix<Scalar>& cols, Index kernel, Tensor<Scalar>& grad_x) {
  const Index batch = grad_x.dim(0), length = grad_x.dim(1), channels = grad_x.dim(2);
  const Index left = (kernel - 1) / 2;
  auto gm = grad_x.matrix();
  for (Index b = 0; b < batch; ++b) {
    for (Index k = 0; k < kernel; ++k) {
      const auto [lo, hi] = tap_range(k, left, length);
      if (hi <= lo) continue;
      gm.block(b * length + lo + k - left, 0, hi - lo, channels) +=
          cols.block(b * length + lo, k * channels, hi - lo, channels);
    }
  }
}

template <typename Scalar>
void check_conv_shapes(const Tensor<Scalar>& x, const Tensor<Scalar>& w) {
  require(x.rank() == 3, "conv1d: input must be B x T x Cin, got " + shape_string(x.shape()));
  require(w.rank() == 3, "conv1d: kernel must be K x Cin x Cout, got " + shape_string(w.shape()));
  require(w.dim(1) == x.dim(2), "conv1d: kernel expects " + std::to_string(w.dim(1)) +
                                    " input channels, input has " + std::to_string(x.dim(2)));
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Convolution (stride 1, length-preserving zero padding)
// ---------------------------------------------------------------------------

/// y[b,t,co] = bias[co] + sum_{k,ci} xpad[b, t+k, ci] * w[k,ci,co], where the input
/// is padded with floor((K-1)/2) zeros on the left and ceil((K-1)/2) on the right.
template <typename Scalar>
Tensor<Scalar> conv1d_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& bias) {
  detail::check_conv_shapes(x, w);
  detail::require(bias.rank() == 1 && bias.dim(0) == w.dim(2), "conv1d: bias must have Cout entries");
  Tensor<Scalar> y({x.dim(0), x.dim(1), w.dim(2)});
  auto ym = y.matrix();
  ym.noalias() = detail::im2col(x, w.dim(0)) * w.matrix();
  ym.rowwise() += bias.data().transpose();
  return y;
}

template <typename Scalar>
struct Conv1dGrads {
  Tensor<Scalar> x;  // empty when not requested
  Tensor<Scalar> w;
  Tensor<Scalar> b;
};

template <typename Scalar>
Conv1dGrads<Scalar> conv1d_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& grad_y,
                                    bool need_grad_x = true) {
  detail::check_conv_shapes(x, w);
  detail::require(grad_y.shape() == Shape({x.dim(0), x.dim(1), w.dim(2)}),
                  "conv1d_backward: grad_y has shape " + shape_string(grad_y.shape()));
  const Index kernel = w.dim(0);
  const auto gy = grad_y.matrix();
  const auto wm = w.matrix();
  const RowMatrix<Scalar> cols = detail::im2col(x, kernel);

  Conv1dGrads<Scalar> g{Tensor<Scalar>(), Tensor<Scalar>(w.shape()), Tensor<Scalar>({w.dim(2)})};
  g.w.matrix().noalias() = cols.transpose() * gy;
  g.b.data() = gy.colwise().sum().transpose();
  if (need_grad_x) {
    g.x = Tensor<Scalar>(x.shape());
    const RowMatrix<Scalar> grad_cols = gy * wm.transpose();
    detail::col2im_add(grad_cols, kernel, g.x);
  }
  return g;
}

// ---------------------------------------------------------------------------
// Batch normalization over the batch and time axes
// ---------------------------------------------------------------------------

struct BatchNormOptions {
  double momentum = 0.99;
  double eps = 1e-3;
};

template <typename Scalar>
struct BatchNormCache {
  Mode mode = Mode::infer;
  RowMatrix<Scalar> xhat;
  Eigen::Array<Scalar, 1, Eigen::Dynamic> inv_std;
};

template <typename Scalar>
Tensor<Scalar> batchnorm_inference(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma, const Tensor<Scalar>& beta,
                                   const Tensor<Scalar>& running_mean, const Tensor<Scalar>& running_var,
                                   double eps = BatchNormOptions{}.eps, BatchNormCache<Scalar>* cache = nullptr) {
  const Index c = x.cols();
  detail::require(gamma.size() == c && beta.size() == c && running_mean.size() == c && running_var.size() == c,
                  "batchnorm: parameter size does not match " + std::to_string(c) + " channels");
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> inv_std =
      (running_var.data().array() + Scalar(eps)).rsqrt().transpose();
  RowMatrix<Scalar> xhat =
      ((x.matrix().array().rowwise() - running_mean.data().array().transpose()).rowwise() * inv_std).matrix();
  Tensor<Scalar> y(x.shape());
  y.matrix() = ((xhat.array().rowwise() * gamma.data().array().transpose()).rowwise() +
                beta.data().array().transpose())
                   .matrix();
  if (cache) *cache = BatchNormCache<Scalar>{Mode::infer, std::move(xhat), inv_std};
  return y;
}

/// Train mode normalizes with the batch statistics (population variance) and folds them
/// into the running statistics: running <- momentum * running + (1 - momentum) * batch.
template <typename Scalar>
Tensor<Scalar> batchnorm_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& gamma, const Tensor<Scalar>& beta,
                                 Tensor<Scalar>& running_mean, Tensor<Scalar>& running_var, Mode mode,
                                 BatchNormCache<Scalar>* cache = nullptr, const BatchNormOptions& options = {}) {
  if (mode == Mode::infer) {
    return batchnorm_inference(x, gamma, beta, running_mean, running_var, options.eps, cache);
  }
  const Index n = x.rows(), c = x.cols();
  detail::require(n >= 2, "batchnorm: train mode needs at least 2 values per channel");
  detail::require(gamma.size() == c && beta.size() == c && running_mean.size() == c && running_var.size() == c,
                  "batchnorm: parameter size does not match " + std::to_string(c) + " channels");

  const auto xa = x.matrix().array();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> mean = xa.colwise().mean();
  RowMatrix<Scalar> centered = (xa.rowwise() - mean).matrix();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> var = centered.array().square().colwise().mean();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> inv_std = (var + Scalar(options.eps)).rsqrt();
  centered.array().rowwise() *= inv_std;

  Tensor<Scalar> y(x.shape());
  y.matrix() = ((centered.array().rowwise() * gamma.data().array().transpose()).rowwise() +
                beta.data().array().transpose())
                   .matrix();

  const auto m = Scalar(options.momentum);
  running_mean.data() = m * running_mean.data() + (Scalar(1) - m) * mean.matrix().transpose();
  running_var.data() = m * running_var.data() + (Scalar(1) - m) * var.matrix().transpose();
  if (cache) *cache = BatchNormCache<Scalar>{Mode::train, std::move(centered), inv_std};
  return y;
}

template <typename Scalar>
struct BatchNormGrads {
  Tensor<Scalar> x;
  Tensor<Scalar> gamma;
  Tensor<Scalar> beta;
};

template <typename Scalar>
BatchNormGrads<Scalar> batchnorm_backward(const BatchNormCache<Scalar>& cache, const Tensor<Scalar>& gamma,
                                          const Tensor<Scalar>& grad_y) {
  const Index n = grad_y.rows(), c = grad_y.cols();
  detail::require(cache.xhat.rows() == n && cache.xhat.cols() == c && gamma.size() == c,
                  "batchnorm_backward: gradient shape " + shape_string(grad_y.shape()) +
                      " does not match the forward pass");
  const auto gy = grad_y.matrix().array();
  const auto xhat = cache.xhat.array();

  BatchNormGrads<Scalar> g{Tensor<Scalar>(grad_y.shape()), Tensor<Scalar>({c}), Tensor<Scalar>({c})};
  g.gamma.data() = (gy * xhat).colwise().sum().transpose();
  g.beta.data() = gy.colwise().sum().transpose();

  const RowMatrix<Scalar> dxhat = (gy.rowwise() * gamma.data().array().transpose()).matrix();
  if (cache.mode == Mode::infer) {
    g.x.matrix() = (dxhat.array().rowwise() * cache.inv_std).matrix();
    return g;
  }
  const auto count = Scalar(n);
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum_d = dxhat.array().colwise().sum();
  const Eigen::Array<Scalar, 1, Eigen::Dynamic> sum_dx = (dxhat.array() * xhat).colwise().sum();
  g.x.matrix() = (((count * dxhat.array()).rowwise() - sum_d - (xhat.rowwise() * sum_dx)).rowwise() *
                  (cache.inv_std / count))
                     .matrix();
  return g;
}

// ---------------------------------------------------------------------------
// Elementwise, pooling and dense layers
// ---------------------------------------------------------------------------

/// While alive, every relu_forward on this thread folds its sign pattern into a hash.
/// Two forward passes with different hashes lie on different linear pieces of the network.
class ReluPatternProbe {
 public:
  ReluPatternProbe() : previous_(detail::relu_pattern_sink) { detail::relu_pattern_sink = &hash_; }
  ~ReluPatternProbe() { detail::relu_pattern_sink = previous_; }
  ReluPatternProbe(const ReluPatternProbe&) = delete;
  ReluPatternProbe& operator=(const ReluPatternProbe&) = delete;

  void reset() { hash_ = kOffset; }
  std::uint64_t value() const { return hash_; }

  static constexpr std::uint64_t kOffset = 0xcbf29ce484222325ULL;

 private:
  std::uint64_t hash_ = kOffset;
  std::uint64_t* previous_;
};

template <typename Scalar>
Tensor<Scalar> relu_forward(const Tensor<Scalar>& x) {
  if (auto* sink = detail::relu_pattern_sink) {
    std::uint64_t word = 0;
    for (Index i = 0; i < x.size(); ++i) {
      word = (word << 1) | (x.data()[i] > Scalar(0) ? 1u : 0u);
      if (i % 64 == 63 || i + 1 == x.size()) {
        *sink = (*sink ^ word) * 0x100000001b3ULL;
        word = 0;
      }
    }
  }
  return Tensor<Scalar>(x.shape(), x.data().cwiseMax(Scalar(0)));
}

template <typename Scalar>
Tensor<Scalar> relu_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& grad_y) {
  detail::require(x.shape() == grad_y.shape(), "relu_backward: shape mismatch");
  return Tensor<Scalar>(x.shape(), (x.data().array() > Scalar(0)).select(grad_y.data(), Scalar(0)));
}

/// Global average pooling over time: B x T x C -> B x C.
template <typename Scalar>
Tensor<Scalar> gap_forward(const Tensor<Scalar>& x) {
  detail::require(x.rank() == 3, "gap: input must be B x T x C");
  const Index batch = x.dim(0), length = x.dim(1);
  Tensor<Scalar> y({batch, x.dim(2)});
  const auto xm = x.matrix();
  for (Index b = 0; b < batch; ++b) y.matrix().row(b) = xm.middleRows(b * length, length).colwise().mean();
  return y;
}

template <typename Scalar>
Tensor<Scalar> gap_backward(const Tensor<Scalar>& grad_y, Index length) {
  detail::require(grad_y.rank() == 2 && length > 0, "gap_backward: gradient must be B x C");
  const Index batch = grad_y.dim(0);
  Tensor<Scalar> g({batch, length, grad_y.dim(1)});
  auto gm = g.matrix();
  for (Index b = 0; b < batch; ++b) {
    gm.middleRows(b * length, length).rowwise() = grad_y.matrix().row(b) / Scalar(length);
  }
  return g;
}

/// Broadcasts a B x C latent across `length` time steps (parameter-free inverse of GAP).
template <typename Scalar>
Tensor<Scalar> tile_forward(const Tensor<Scalar>& z, Index length) {
  detail::require(z.rank() == 2 && length > 0, "tile: input must be B x C");
  const Index batch = z.dim(0);
  Tensor<Scalar> y({batch, length, z.dim(1)});
  auto ym = y.matrix();
  for (Index b = 0; b < batch; ++b) ym.middleRows(b * length, length).rowwise() = z.matrix().row(b);
  return y;
}

template <typename Scalar>
Tensor<Scalar> tile_backward(const Tensor<Scalar>& grad_y) {
  detail::require(grad_y.rank() == 3, "tile_backward: gradient must be B x T x C");
  const Index batch = grad_y.dim(0), length = grad_y.dim(1);
  Tensor<Scalar> g({batch, grad_y.dim(2)});
  const auto gm = grad_y.matrix();
  for (Index b = 0; b < batch; ++b) g.matrix().row(b) = gm.middleRows(b * length, length).colwise().sum();
  return g;
}

template <typename Scalar>
Tensor<Scalar> dense_forward(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& bias) {
  detail::require(x.rank() == 2 && w.rank() == 2 && w.dim(0) == x.dim(1),
                  "dense: shapes " + shape_string(x.shape()) + " and " + shape_string(w.shape()) + " do not chain");
  detail::require(bias.rank() == 1 && bias.dim(0) == w.dim(1), "dense: bias must have K entries");
  Tensor<Scalar> y({x.dim(0), w.dim(1)});
  y.matrix().noalias() = x.matrix() * w.matrix();
  y.matrix().rowwise() += bias.data().transpose();
  return y;
}

template <typename Scalar>
struct DenseGrads {
  Tensor<Scalar> x;
  Tensor<Scalar> w;
  Tensor<Scalar> b;
};

template <typename Scalar>
DenseGrads<Scalar> dense_backward(const Tensor<Scalar>& x, const Tensor<Scalar>& w, const Tensor<Scalar>& grad_y) {
  detail::require(x.rank() == 2 && w.rank() == 2 && w.dim(0) == x.dim(1) &&
                      grad_y.shape() == Shape({x.dim(0), w.dim(1)}),
                  "dense_backward: shape mismatch");
  DenseGrads<Scalar> g{Tensor<Scalar>(x.shape()), Tensor<Scalar>(w.shape()), Tensor<Scalar>({w.dim(1)})};
  g.x.matrix().noalias() = grad_y.matrix() * w.matrix().transpose();
  g.w.matrix().noalias() = x.matrix().transpose() * grad_y.matrix();
  g.b.data() = grad_y.matrix().colwise().sum().transpose();
  return g;
}

// ---------------------------------------------------------------------------
// Stateful layers: own their parameters and cache what backward needs
// ---------------------------------------------------------------------------

/// Glorot-uniform fill with limit sqrt(6 / (fan_in + fan_out)).
template <typename Scalar, typename Rng>
void glorot_uniform(Tensor<Scalar>& t, Index fan_in, Index fan_out, Rng& rng) {
  const double limit = std::sqrt(6.0 / static_cast<double>(fan_in + fan_out));
  std::uniform_real_distribution<double> dist(-limit, limit);
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<Scalar>(dist(rng));
}

template <typename Scalar>
class Conv1d {
 public:
  Conv1d() = default;
  Conv1d(const std::string& name, Index kernel, Index in_channels, Index out_channels)
      : weight(name + ".weight", Tensor<Scalar>({kernel, in_channels, out_channels})),
        bias(name + ".bias", Tensor<Scalar>({out_channels})) {}

  template <typename Rng>
  void initialize(Rng& rng) {
    const Index k = weight.value.dim(0);
    glorot_uniform(weight.value, k * weight.value.dim(1), k * weight.value.dim(2), rng);
    bias.value.set_zero();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) {
    input_ = x;
    return conv1d_forward(x, weight.value, bias.value);
  }

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const { return conv1d_forward(x, weight.value, bias.value); }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_y, bool need_grad_x = true) {
    auto g = conv1d_backward(input_, weight.value, grad_y, need_grad_x);
    weight.grad = std::move(g.w);
    bias.grad = std::move(g.b);
    return std::move(g.x);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(weight);
    f(bias);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    f(weight.name, weight.value);
    f(bias.name, bias.value);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(weight.name, weight.value);
    f(bias.name, bias.value);
  }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  Tensor<Scalar> input_;
};

template <typename Scalar>
class BatchNorm {
 public:
  BatchNorm() = default;
  BatchNorm(const std::string& name, Index channels)
      : gamma(name + ".gamma", Tensor<Scalar>({channels}, Vector<Scalar>::Ones(channels))),
        beta(name + ".beta", Tensor<Scalar>({channels})),
        running_mean_name(name + ".running_mean"),
        running_var_name(name + ".running_var"),
        running_mean({channels}),
        running_var({channels}, Vector<Scalar>::Ones(channels)) {}

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode) {
    auto y = batchnorm_forward(x, gamma.value, beta.value, running_mean, running_var, mode, &cache_, options);
    if (mode == Mode::train) finalized = true;
    return y;
  }

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const {
    return batchnorm_inference(x, gamma.value, beta.value, running_mean, running_var, options.eps);
  }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_y) {
    auto g = batchnorm_backward(cache_, gamma.value, grad_y);
    gamma.grad = std::move(g.gamma);
    beta.grad = std::move(g.beta);
    return std::move(g.x);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(gamma);
    f(beta);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    f(gamma.name, gamma.value);
    f(beta.name, beta.value);
    f(running_mean_name, running_mean);
    f(running_var_name, running_var);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(gamma.name, gamma.value);
    f(beta.name, beta.value);
    f(running_mean_name, running_mean);
    f(running_var_name, running_var);
  }

  Parameter<Scalar> gamma;
  Parameter<Scalar> beta;
  std::string running_mean_name;
  std::string running_var_name;
  Tensor<Scalar> running_mean;
  Tensor<Scalar> running_var;
  BatchNormOptions options;
  /// Set once running statistics have been accumulated (or loaded).
  bool finalized = false;

 private:
  BatchNormCache<Scalar> cache_;
};

template <typename Scalar>
class Dense {
 public:
  Dense() = default;
  Dense(const std::string& name, Index in_features, Index out_features)
      : weight(name + ".weight", Tensor<Scalar>({in_features, out_features})),
        bias(name + ".bias", Tensor<Scalar>({out_features})) {}

  template <typename Rng>
  void initialize(Rng& rng) {
    glorot_uniform(weight.value, weight.value.dim(0), weight.value.dim(1), rng);
    bias.value.set_zero();
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x) {
    input_ = x;
    return dense_forward(x, weight.value, bias.value);
  }

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const { return dense_forward(x, weight.value, bias.value); }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_y) {
    auto g = dense_backward(input_, weight.value, grad_y);
    weight.grad = std::move(g.w);
    bias.grad = std::move(g.b);
    return std::move(g.x);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    f(weight);
    f(bias);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    f(weight.name, weight.value);
    f(bias.name, bias.value);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    f(weight.name, weight.value);
    f(bias.name, bias.value);
  }

  Parameter<Scalar> weight;
  Parameter<Scalar> bias;

 private:
  Tensor<Scalar> input_;
};

/// Convolution, batch normalization and ReLU.
template <typename Scalar>
class ConvBlock {
 public:
  ConvBlock() = default;
  ConvBlock(const std::string& name, Index kernel, Index in_channels, Index filters)
      : conv(name + ".conv", kernel, in_channels, filters), bn(name + ".bn", filters) {}

  template <typename Rng>
  void initialize(Rng& rng) {
    conv.initialize(rng);
  }

  Tensor<Scalar> forward(const Tensor<Scalar>& x, Mode mode) {
    normalized_ = bn.forward(conv.forward(x), mode);
    return relu_forward(normalized_);
  }

  Tensor<Scalar> infer(const Tensor<Scalar>& x) const { return relu_forward(bn.infer(conv.infer(x))); }

  Tensor<Scalar> backward(const Tensor<Scalar>& grad_y, bool need_grad_x = true) {
    return conv.backward(bn.backward(relu_backward(normalized_, grad_y)), need_grad_x);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    conv.for_each_parameter(f);
    bn.for_each_parameter(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    conv.for_each_tensor(f);
    bn.for_each_tensor(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    conv.for_each_tensor(f);
    bn.for_each_tensor(f);
  }

  Conv1d<Scalar> conv;
  BatchNorm<Scalar> bn;

 private:
  Tensor<Scalar> normalized_;
};

}  // namespace gaitverify::nn
