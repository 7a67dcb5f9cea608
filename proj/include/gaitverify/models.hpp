#pragma once

#include "gaitverify/data.hpp"
#include "gaitverify/nn/layers.hpp"
#include "gaitverify/nn/losses.hpp"

#include <array>
#include <cstdint>
#include <random>
#include <span>
#include <string>
#include <vector>

namespace gaitverify {

using nn::Mode;
using nn::Parameter;
using nn::Tensor;

inline constexpr Index kFeatureDim = 128;

struct BlockSpec {
  Index filters;
  Index kernel;
};

/// Convolutional blocks of the FCN, input side first.
inline constexpr std::array<BlockSpec, 3> kEncoderBlocks{{{128, 8}, {256, 5}, {128, 3}}};
/// Decoder blocks: the encoder layers in reverse order, ending in a 3-channel convolution.
inline constexpr std::array<BlockSpec, 2> kDecoderBlocks{{{128, 3}, {256, 5}}};
inline constexpr Index kDecoderOutputKernel = 8;

namespace detail {

/// Visits every named tensor of `src` and `dst` in lockstep and copies with a scalar cast.
template <typename Src, typename Dst>
void copy_tensors(const Src& src, Dst& dst) {
  std::vector<std::pair<std::string, Eigen::VectorXd>> values;
  src.for_each_tensor([&](const std::string& name, const auto& t) {
    values.emplace_back(name, t.data().template cast<double>());
  });
  std::size_t i = 0;
  dst.for_each_tensor([&](const std::string& name, auto& t) {
    using S = typename std::decay_t<decltype(t.data())>::Scalar;
    if (i >= values.size() || values[i].first != name || values[i].second.size() != t.size()) {
      throw InvalidInput("model structure mismatch at tensor " + name);
    }
    t.data() = values[i++].second.template cast<S>();
  });
}

}  // namespace detail

/// Three conv blocks followed by global average pooling: B x T x 3 -> B x 128.
template <typename S>
class Encoder {
 public:
  using Scalar = S;

  Encoder() {
    Index in = kChannels;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i] = nn::ConvBlock<S>("encoder.block" + std::to_string(i + 1), kEncoderBlocks[i].kernel, in,
                                   kEncoderBlocks[i].filters);
      in = kEncoderBlocks[i].filters;
    }
  }

  template <typename Rng>
  void initialize(Rng& rng) {
    for (auto& b : blocks) b.initialize(rng);
  }

  Tensor<S> forward(const Tensor<S>& x, Mode mode) {
    length_ = x.dim(1);
    Tensor<S> h = x;
    for (auto& b : blocks) h = b.forward(h, mode);
    return nn::gap_forward(h);
  }

  /// Inference with running batch-norm statistics; does not touch any cache.
  Tensor<S> infer(const Tensor<S>& x) const {
    Tensor<S> h = x;
    for (const auto& b : blocks) h = b.infer(h);
    return nn::gap_forward(h);
  }

  /// Returns the gradient with respect to the input only if `need_grad_x`.
  Tensor<S> backward(const Tensor<S>& grad_features, bool need_grad_x = false) {
    Tensor<S> g = nn::gap_backward(grad_features, length_);
    for (std::size_t i = blocks.size(); i-- > 0;) g = blocks[i].backward(g, i > 0 || need_grad_x);
    return g;
  }

  bool finalized() const {
    for (const auto& b : blocks) {
      if (!b.bn.finalized) return false;
    }
    return true;
  }
  void mark_finalized() {
    for (auto& b : blocks) b.bn.finalized = true;
  }

  std::vector<Parameter<S>*> parameters() {
    std::vector<Parameter<S>*> out;
    for_each_parameter([&](Parameter<S>& p) { out.push_back(&p); });
    return out;
  }
  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& b : blocks) b.for_each_parameter(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    for (auto& b : blocks) b.for_each_tensor(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    for (const auto& b : blocks) b.for_each_tensor(f);
  }

  template <typename T>
  Encoder<T> cast() const {
    Encoder<T> out;
    detail::copy_tensors(*this, out);
    if (finalized()) out.mark_finalized();
    return out;
  }

  std::array<nn::ConvBlock<S>, 3> blocks;

 private:
  Index length_ = 0;
};

/// Encoder plus a dense head producing class logits.
template <typename S>
class FcnClassifier {
 public:
  using Scalar = S;

  FcnClassifier() : FcnClassifier(2) {}
  explicit FcnClassifier(Index num_classes) : head("head", kFeatureDim, num_classes) {}

  Index num_classes() const { return head.bias.value.size(); }

  Tensor<S> logits(const Tensor<S>& x, Mode mode) { return head.forward(encoder.forward(x, mode)); }
  Tensor<S> infer_logits(const Tensor<S>& x) const { return head.infer(encoder.infer(x)); }

  double loss(const Tensor<S>& x, std::span<const int> labels, Mode mode, bool backward) {
    auto ce = nn::softmax_crossentropy(logits(x, mode), labels);
    if (backward) encoder.backward(head.backward(ce.grad));
    return ce.loss;
  }

  std::vector<Parameter<S>*> parameters() {
    std::vector<Parameter<S>*> out = encoder.parameters();
    head.for_each_parameter([&](Parameter<S>& p) { out.push_back(&p); });
    return out;
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    encoder.for_each_tensor(f);
    head.for_each_tensor(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    encoder.for_each_tensor(f);
    head.for_each_tensor(f);
  }

  template <typename T>
  FcnClassifier<T> cast() const {
    FcnClassifier<T> out(num_classes());
    detail::copy_tensors(*this, out);
    if (encoder.finalized()) out.encoder.mark_finalized();
    return out;
  }

  Encoder<S> encoder;
  nn::Dense<S> head;
};

/// Tiles the latent over time, then conv blocks (kernels 3, 5) and a final linear
/// 3-channel convolution (kernel 8): B x 128 -> B x T x 3.
template <typename S>
class Decoder {
 public:
  using Scalar = S;

  Decoder() {
    Index in = kFeatureDim;
    for (std::size_t i = 0; i < blocks.size(); ++i) {
      blocks[i] = nn::ConvBlock<S>("decoder.block" + std::to_string(i + 1), kDecoderBlocks[i].kernel, in,
                                   kDecoderBlocks[i].filters);
      in = kDecoderBlocks[i].filters;
    }
    output = nn::Conv1d<S>("decoder.output", kDecoderOutputKernel, in, kChannels);
  }

  template <typename Rng>
  void initialize(Rng& rng) {
    for (auto& b : blocks) b.initialize(rng);
    output.initialize(rng);
  }

  Tensor<S> forward(const Tensor<S>& z, Index length, Mode mode) {
    Tensor<S> h = nn::tile_forward(z, length);
    for (auto& b : blocks) h = b.forward(h, mode);
    return output.forward(h);
  }

  Tensor<S> infer(const Tensor<S>& z, Index length) const {
    Tensor<S> h = nn::tile_forward(z, length);
    for (const auto& b : blocks) h = b.infer(h);
    return output.infer(h);
  }

  Tensor<S> backward(const Tensor<S>& grad_y) {
    Tensor<S> g = output.backward(grad_y);
    for (std::size_t i = blocks.size(); i-- > 0;) g = blocks[i].backward(g);
    return nn::tile_backward(g);
  }

  template <typename F>
  void for_each_parameter(F&& f) {
    for (auto& b : blocks) b.for_each_parameter(f);
    output.for_each_parameter(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    for (auto& b : blocks) b.for_each_tensor(f);
    output.for_each_tensor(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    for (const auto& b : blocks) b.for_each_tensor(f);
    output.for_each_tensor(f);
  }

  std::array<nn::ConvBlock<S>, 2> blocks;
  nn::Conv1d<S> output;
};

/// Encoder/decoder pair trained on reconstruction MSE.
template <typename S>
class Autoencoder {
 public:
  using Scalar = S;

  Tensor<S> reconstruct(const Tensor<S>& x, Mode mode) { return decoder.forward(encoder.forward(x, mode), x.dim(1), mode); }
  Tensor<S> infer_reconstruction(const Tensor<S>& x) const { return decoder.infer(encoder.infer(x), x.dim(1)); }

  double loss(const Tensor<S>& x, std::span<const int> /*labels*/, Mode mode, bool backward) {
    auto mse = nn::mse_loss(x, reconstruct(x, mode));
    if (backward) encoder.backward(decoder.backward(mse.grad));
    return mse.loss;
  }

  std::vector<Parameter<S>*> parameters() {
    std::vector<Parameter<S>*> out = encoder.parameters();
    decoder.for_each_parameter([&](Parameter<S>& p) { out.push_back(&p); });
    return out;
  }
  template <typename F>
  void for_each_tensor(F&& f) {
    encoder.for_each_tensor(f);
    decoder.for_each_tensor(f);
  }
  template <typename F>
  void for_each_tensor(F&& f) const {
    encoder.for_each_tensor(f);
    decoder.for_each_tensor(f);
  }

  template <typename T>
  Autoencoder<T> cast() const {
    Autoencoder<T> out;
    detail::copy_tensors(*this, out);
    if (encoder.finalized()) out.encoder.mark_finalized();
    return out;
  }

  Encoder<S> encoder;
  Decoder<S> decoder;
};

/// Freshly initialized FCN classifier (Glorot-uniform weights, zero biases).
template <typename S = float>
FcnClassifier<S> build_fcn(Index num_classes, std::uint64_t seed) {
  if (num_classes < 2) throw InvalidInput("build_fcn: need at least 2 classes");
  FcnClassifier<S> model(num_classes);
  std::mt19937_64 rng(seed);
  model.encoder.initialize(rng);
  model.head.initialize(rng);
  return model;
}

template <typename S = float>
Autoencoder<S> build_autoencoder(std::uint64_t seed) {
  Autoencoder<S> model;
  std::mt19937_64 rng(seed);
  model.encoder.initialize(rng);
  model.decoder.initialize(rng);
  return model;
}

/// Drops the classification head; the encoder computes the classifier's GAP activations.
template <typename S>
Encoder<S> strip_classifier(const FcnClassifier<S>& fcn) {
  return fcn.encoder;
}

/// Number of trainable scalars (running statistics excluded).
template <typename Model>
Index count_parameters(Model& model) {
  Index total = 0;
  for (auto* p : model.parameters()) total += p->value.size();
  return total;
}

/// Stacks frames into an N x T x 3 tensor.
template <typename S = float>
Tensor<S> frames_to_tensor(std::span<const Frame> frames) {
  if (frames.empty()) throw InvalidInput("frames_to_tensor: no frames");
  const Index length = frames.front().values.rows();
  Tensor<S> t({static_cast<Index>(frames.size()), length, kChannels});
  auto m = t.matrix();
  for (std::size_t i = 0; i < frames.size(); ++i) {
    if (frames[i].values.rows() != length) throw InvalidInput("frames_to_tensor: frames differ in length");
    m.middleRows(static_cast<Index>(i) * length, length) = frames[i].values.template cast<S>();
  }
  return t;
}

/// One 128-d vector per frame, in input order. Requires finalized batch-norm statistics.
std::vector<FeatureVector> extract_features(const Encoder<float>& encoder, std::span<const Frame> frames);

/// Channel-major concatenation [ax(0..T), ay(0..T), az(0..T)].
Eigen::VectorXd raw_features(const Frame& frame);
std::vector<FeatureVector> raw_features(std::span<const Frame> frames);

inline constexpr const char* kEncoderArchitecture = "fcn-encoder/v1";
inline constexpr const char* kClassifierArchitecture = "fcn-classifier/v1";
inline constexpr const char* kAutoencoderArchitecture = "conv-autoencoder/v1";

/// Single-precision snapshot of every tensor (parameters and running statistics).
template <typename Model>
ModelContainer to_container(const Model& model, const std::string& architecture) {
  ModelContainer c;
  c.metadata["architecture"] = architecture;
  model.for_each_tensor([&](const std::string& name, const auto& t) {
    ContainerEntry e{name, {}, {}};
    for (Index d : t.shape()) e.shape.push_back(static_cast<std::uint64_t>(d));
    const Eigen::VectorXf values = t.data().template cast<float>();
    e.values.assign(values.data(), values.data() + values.size());
    c.entries.push_back(std::move(e));
  });
  return c;
}

/// Fills `model` from a container holding the same named tensors.
template <typename Model>
void load_tensors(Model& model, const ModelContainer& c) {
  model.for_each_tensor([&](const std::string& name, auto& t) {
    const auto* e = c.find(name);
    if (!e) throw FormatError("container lacks tensor " + name);
    nn::Shape shape;
    for (auto d : e->shape) shape.push_back(static_cast<Index>(d));
    if (shape != t.shape()) {
      throw FormatError("tensor " + name + " has shape " + nn::shape_string(shape) + ", expected " +
                        nn::shape_string(t.shape()));
    }
    using S = typename std::decay_t<decltype(t.data())>::Scalar;
    t.data() = Eigen::Map<const Eigen::VectorXf>(e->values.data(), static_cast<Index>(e->values.size())).cast<S>();
  });
}

ModelContainer encoder_to_container(const Encoder<float>& encoder);
Encoder<float> encoder_from_container(const ModelContainer& container);

}  // namespace gaitverify
