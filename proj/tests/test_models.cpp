#include "gaitverify/augment.hpp"
#include "gaitverify/models.hpp"
#include "gaitverify/nn/losses.hpp"
#include "gaitverify/nn/train.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

using namespace gaitverify;
using namespace gaitverify::nn;
using gaitverify::testing::Rng;
using gaitverify::testing::random_frame;
using gaitverify::testing::uniform;

namespace {

Tensor<float> random_input(Index batch, Rng& rng, Index length = kFrameLength) {
  Tensor<float> t({batch, length, kChannels});
  for (Index i = 0; i < t.size(); ++i) t.data()[i] = static_cast<float>(uniform(rng, -2, 2));
  return t;
}

/// A few train-mode passes so the batch-norm running statistics are populated.
template <typename Model>
void warm_up(Model& model, const Tensor<float>& x) {
  for (int i = 0; i < 3; ++i) model.loss(x, std::vector<int>(static_cast<std::size_t>(x.dim(0)), 0), Mode::train, false);
}

}  // namespace

TEST(BuildFcn, ParameterCountRegression) {
  // conv k*cin*cout + cout, batch norm 2*c, head 128*K + K.
  auto model = build_fcn<float>(50, 1);
  EXPECT_EQ(count_parameters(model), 273202);
  EXPECT_EQ(model.num_classes(), 50);
  EXPECT_THROW(build_fcn<float>(1, 1), InvalidInput);
}

TEST(BuildFcn, LogitsShapeAndSimplex) {
  Rng rng(1);
  auto model = build_fcn<float>(5, 2);
  const auto logits = model.logits(random_input(3, rng), Mode::train);
  ASSERT_EQ(logits.shape(), (Shape{3, 5}));
  const auto p = softmax(logits);
  EXPECT_LT((p.matrix().rowwise().sum().array() - 1.0f).abs().maxCoeff(), 1e-6f);
}

TEST(BuildFcn, HeadPermutationEquivariance) {
  Rng rng(2);
  auto model = build_fcn<float>(4, 3);
  const auto x = random_input(2, rng);
  warm_up(model, x);
  const auto before = model.infer_logits(x);
  const std::vector<Index> perm{2, 0, 3, 1};
  auto permuted = model;
  for (Index k = 0; k < 4; ++k) {
    permuted.head.weight.value.matrix().col(k) = model.head.weight.value.matrix().col(perm[static_cast<std::size_t>(k)]);
    permuted.head.bias.value.data()[k] = model.head.bias.value.data()[perm[static_cast<std::size_t>(k)]];
  }
  const auto after = permuted.infer_logits(x);
  for (Index b = 0; b < 2; ++b)
    for (Index k = 0; k < 4; ++k) EXPECT_EQ(after.matrix()(b, k), before.matrix()(b, perm[static_cast<std::size_t>(k)]));
}

TEST(StripClassifier, EncoderEqualsGapActivations) {
  Rng rng(3);
  auto model = build_fcn<float>(7, 4);
  const auto x = random_input(4, rng);
  warm_up(model, x);
  const auto encoder = strip_classifier(model);
  const auto features = encoder.infer(x);
  ASSERT_EQ(features.shape(), (Shape{4, kFeatureDim}));
  EXPECT_EQ(features.data(), model.encoder.infer(x).data());
  // The head applied to the stripped features reproduces the logits.
  EXPECT_EQ(model.head.infer(features).data(), model.infer_logits(x).data());
  EXPECT_EQ(strip_classifier(build_fcn<float>(2, 4)).infer(x).dim(1), kFeatureDim);
}

TEST(StripClassifier, SerializedEncoderReloadsToIdenticalOutputs) {
  Rng rng(4);
  auto model = build_fcn<float>(3, 5);
  const auto x = random_input(3, rng);
  warm_up(model, x);
  auto encoder = strip_classifier(model);
  encoder.mark_finalized();
  const auto bytes = serialize_container(encoder_to_container(encoder));
  const auto reloaded = encoder_from_container(parse_container(bytes));
  EXPECT_TRUE(reloaded.finalized());
  EXPECT_EQ(reloaded.infer(x).data(), encoder.infer(x).data());
  EXPECT_THROW(encoder_from_container(to_container(model, kClassifierArchitecture)), FormatError);
}

TEST(Autoencoder, ReconstructionShapeAndInitialMagnitude) {
  Rng rng(5);
  auto model = build_autoencoder<float>(6);
  std::vector<Frame> frames;
  for (int i = 0; i < 8; ++i) frames.push_back(zscore(random_frame(rng)));
  const auto x = frames_to_tensor<float>(frames);
  EXPECT_EQ(model.reconstruct(x, Mode::train).shape(), x.shape());
  EXPECT_GT(model.loss(x, {}, Mode::train, false), 0.1);
  EXPECT_EQ(count_parameters(model), 273202 - 6450 + (3 * 128 * 128 + 128 + 256) + (5 * 128 * 256 + 256 + 512) +
                                         (8 * 256 * 3 + 3));
}

TEST(Autoencoder, TrainingHalvesReconstructionError) {
  // Smooth periodic frames are easy to reconstruct; a short run must cut the MSE in half.
  std::vector<Frame> frames;
  Rng rng(6);
  for (int i = 0; i < 48; ++i) {
    Frame f{Samples(kFrameLength, 3), {"s", "1", "r", i}};
    const double freq = uniform(rng, 1.6, 2.4), phase = uniform(rng, 0, 6.28);
    for (Index t = 0; t < kFrameLength; ++t) {
      const double s = 2 * 3.14159265 * freq * static_cast<double>(t) / 100.0 + phase;
      f.values.row(t) << std::sin(s), std::cos(2 * s), std::sin(0.5 * s + 1);
    }
    frames.push_back(zscore(f));
  }
  Dataset<float> data{frames_to_tensor<float>(frames), {}};
  TrainConfig config;
  config.epochs = 15;
  config.batch_size = 16;
  config.seed = 3;
  const auto result = train(build_autoencoder<float>(7), data, data, config);
  EXPECT_LT(result.history[static_cast<std::size_t>(result.best_epoch - 1)].val_loss,
            0.5 * result.history.front().train_loss);
}

TEST(Models, CastToDoubleAndBack) {
  Rng rng(7);
  auto model = build_fcn<float>(3, 8);
  const auto x = random_input(2, rng, 32);
  warm_up(model, x);
  const auto twice = model.cast<double>().cast<float>();
  EXPECT_EQ(twice.infer_logits(x).data(), model.infer_logits(x).data());
}

TEST(ExtractFeatures, RequiresFinalizedStatistics) {
  Rng rng(8);
  std::vector<Frame> frames{random_frame(rng)};
  const auto fresh = build_fcn<float>(2, 9).encoder;
  EXPECT_THROW(extract_features(fresh, frames), InvalidState);
}

TEST(ExtractFeatures, OrderDuplicatesAndBatching) {
  Rng rng(9);
  auto model = build_fcn<float>(2, 10);
  warm_up(model, random_input(4, rng));
  std::vector<Frame> frames;
  for (int i = 0; i < 5; ++i) frames.push_back(zscore(random_frame(rng)));
  frames.push_back(frames[1]);
  for (Index i = 0; i < 6; ++i) frames[static_cast<std::size_t>(i)].source.frame_index = i;
  const auto features = extract_features(model.encoder, frames);
  ASSERT_EQ(features.size(), 6u);
  EXPECT_EQ(features[1].values, features[5].values);
  for (std::size_t i = 0; i < 6; ++i) {
    EXPECT_EQ(features[i].source, frames[i].source);
    EXPECT_EQ(features[i].values.size(), kFeatureDim);
  }
  const auto batched = model.encoder.infer(frames_to_tensor<float>(frames));
  for (Index i = 0; i < 6; ++i) {
    EXPECT_LT((batched.matrix().row(i).transpose().cast<double>() - features[static_cast<std::size_t>(i)].values)
                  .cwiseAbs()
                  .maxCoeff(),
              1e-6);
  }
}

TEST(RawFeatures, ChannelMajorConcatenation) {
  Frame f{Samples(kFrameLength, 3), {}};
  f.values.col(0).setConstant(1);
  f.values.col(1).setConstant(2);
  f.values.col(2).setConstant(3);
  const auto v = raw_features(f);
  ASSERT_EQ(v.size(), 384);
  EXPECT_TRUE(v.head(128).isConstant(1));
  EXPECT_TRUE(v.segment(128, 128).isConstant(2));
  EXPECT_TRUE(v.tail(128).isConstant(3));
  EXPECT_TRUE(raw_features(Frame{Samples::Zero(kFrameLength, 3), {}}).isZero(0));
  Rng rng(10);
  const auto g = random_frame(rng);
  const auto w = raw_features(g);
  EXPECT_EQ(Eigen::Map<const Samples>(w.data(), kFrameLength, 3), g.values);
}
