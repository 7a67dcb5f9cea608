#include "gaitverify/augment.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <algorithm>

using namespace gaitverify;
using gaitverify::testing::for_all;
using gaitverify::testing::random_frame;
using gaitverify::testing::uniform_int;

namespace {

Frame ramp_frame(Index n) {
  Frame f{Samples(n, 3), {}};
  for (Index i = 0; i < n; ++i) f.values.row(i) << static_cast<double>(i + 1), 10.0 * (i + 1), -(i + 1.0);
  return f;
}

std::vector<double> sorted_column(const Frame& f, Index c) {
  std::vector<double> v(f.values.col(c).begin(), f.values.col(c).end());
  std::sort(v.begin(), v.end());
  return v;
}

}  // namespace

TEST(CircularShift, OneBasedLeftRotation) {
  const auto out = circular_shift(ramp_frame(5), 3);
  const double expected[] = {3, 4, 5, 1, 2};
  for (Index i = 0; i < 5; ++i) {
    EXPECT_EQ(out.values(i, 0), expected[i]);
    EXPECT_EQ(out.values(i, 1), 10 * expected[i]);
    EXPECT_EQ(out.values(i, 2), -expected[i]);
  }
}

TEST(CircularShift, ShiftsCompose) {
  const auto twice = circular_shift(circular_shift(ramp_frame(5), 2), 2);
  EXPECT_EQ(twice.values, circular_shift(ramp_frame(5), 3).values);
}

TEST(CircularShift, RangeIsChecked) {
  EXPECT_THROW(circular_shift(ramp_frame(5), 1), InvalidInput);
  EXPECT_THROW(circular_shift(ramp_frame(5), 5), InvalidInput);
  EXPECT_NO_THROW(circular_shift(ramp_frame(5), 4));
}

TEST(CircularShift, PermutesWithoutIdentity) {
  for_all(21, 100, [](auto& rng, int) {
    const auto f = random_frame(rng);
    const auto out = circular_shift(f, uniform_int(rng, 2, 127));
    ASSERT_NE(out.values, f.values);
    for (Index c = 0; c < 3; ++c) ASSERT_EQ(sorted_column(out, c), sorted_column(f, c));
  });
}

TEST(UniformNoise, BoundedAndReproducible) {
  const Frame zero{Samples::Zero(128, 3), {}};
  Rng a(5), b(5);
  const auto x = add_uniform_noise(zero, a);
  EXPECT_EQ(x.values, add_uniform_noise(zero, b).values);
  EXPECT_LE(x.values.cwiseAbs().maxCoeff(), 0.2);
  Rng tiny(1);
  EXPECT_LE(add_uniform_noise(zero, tiny, 1e-12).values.cwiseAbs().maxCoeff(), 1e-12);
  EXPECT_THROW(add_uniform_noise(zero, tiny, 0.0), InvalidInput);
}

TEST(UniformNoise, EmpiricalMoments) {
  const Frame zero{Samples::Zero(128, 3), {}};
  Rng rng(17);
  double sum_abs = 0.0, max_abs = 0.0;
  Index count = 0;
  while (count < 10000) {
    const auto out = add_uniform_noise(zero, rng);
    sum_abs += out.values.cwiseAbs().sum();
    max_abs = std::max(max_abs, out.values.cwiseAbs().maxCoeff());
    count += out.values.size();
  }
  EXPECT_LE(max_abs, 0.2);
  EXPECT_NEAR(sum_abs / static_cast<double>(count), 0.1, 0.01);
}

TEST(UniformNoise, ChannelMeanMovesAtMostAmplitude) {
  for_all(22, 50, [](auto& rng, int) {
    const auto f = random_frame(rng);
    const auto out = add_uniform_noise(f, rng);
    for (Index c = 0; c < 3; ++c) ASSERT_LE(std::abs(out.values.col(c).mean() - f.values.col(c).mean()), 0.2);
  });
}

TEST(AugmentDataset, DoublesWithOriginalsFirst) {
  Rng rng(3);
  std::vector<Frame> frames;
  for (int i = 0; i < 100; ++i) frames.push_back(random_frame(rng));
  for (auto kind : {AugmentationKind::circular_shift, AugmentationKind::random_noise}) {
    Rng r1(9), r2(9);
    const auto out = augment_dataset(frames, kind, r1);
    ASSERT_EQ(out.size(), 200u);
    for (std::size_t i = 0; i < 100; ++i) {
      EXPECT_EQ(out[i].values, frames[i].values);
      EXPECT_NE(out[100 + i].values, frames[i].values);
      EXPECT_EQ(out[100 + i].source, frames[i].source);
    }
    const auto again = augment_dataset(frames, kind, r2);
    for (std::size_t i = 0; i < out.size(); ++i) EXPECT_EQ(out[i].values, again[i].values);
  }
  EXPECT_TRUE(augment_dataset({}, AugmentationKind::circular_shift, rng).empty());
  EXPECT_THROW(augment_dataset(frames, AugmentationKind::none, rng), InvalidInput);
}

TEST(AugmentationKind, NamesRoundTrip) {
  for (auto kind : {AugmentationKind::none, AugmentationKind::random_noise, AugmentationKind::circular_shift}) {
    EXPECT_EQ(parse_augmentation(to_string(kind)), kind);
  }
  EXPECT_THROW(parse_augmentation("flip"), InvalidInput);
}
