#include "gaitverify/signal.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>

using namespace gaitverify;
using gaitverify::testing::for_all;
using gaitverify::testing::uniform;
using gaitverify::testing::uniform_int;

namespace {

RawRecording make_recording(const std::vector<double>& t, const std::vector<double>& channel) {
  RawRecording rec{"s001", "1", "r01", Eigen::VectorXd::Map(t.data(), static_cast<Index>(t.size())),
                   Samples(static_cast<Index>(t.size()), 3)};
  for (std::size_t i = 0; i < t.size(); ++i) {
    rec.samples.row(static_cast<Index>(i)) << channel[i], -channel[i], 2.0 * channel[i];
  }
  return rec;
}

RawRecording uniform_recording(Index n, double hz = 100.0) {
  RawRecording rec{"s001", "1", "r01", Eigen::VectorXd(n), Samples(n, 3)};
  for (Index i = 0; i < n; ++i) {
    rec.timestamps[i] = static_cast<double>(i) / hz;
    rec.samples.row(i) << std::sin(0.1 * static_cast<double>(i)), static_cast<double>(i), 1.0;
  }
  return rec;
}

/// Straightforward scalar interpolation used as the reference.
double interpolate(const std::vector<double>& t, const std::vector<double>& v, double at) {
  for (std::size_t i = 0; i + 1 < t.size(); ++i) {
    if (at >= t[i] && at <= t[i + 1]) return v[i] + (v[i + 1] - v[i]) * (at - t[i]) / (t[i + 1] - t[i]);
  }
  return v.back();
}

}  // namespace

TEST(ResampleLinear, MidpointsAt50Hz) {
  const auto out = resample_linear(make_recording({0, 0.02, 0.04}, {0, 1, 2}));
  ASSERT_EQ(out.samples.rows(), 5);
  const double expected[] = {0, 0.5, 1, 1.5, 2};
  for (Index i = 0; i < 5; ++i) {
    EXPECT_NEAR(out.timestamps[i], 0.01 * static_cast<double>(i), 1e-12);
    EXPECT_NEAR(out.samples(i, 0), expected[i], 1e-12);
    EXPECT_NEAR(out.samples(i, 1), -expected[i], 1e-12);
    EXPECT_NEAR(out.samples(i, 2), 2 * expected[i], 1e-12);
  }
}

TEST(ResampleLinear, NonuniformMatchesScalarOracle) {
  const std::vector<double> t{0, 0.013, 0.031}, v{1, 4, 2};
  const auto out = resample_linear(make_recording(t, v));
  ASSERT_EQ(out.samples.rows(), 4);  // floor(0.031 * 100) + 1
  for (Index i = 0; i < 4; ++i) {
    EXPECT_NEAR(out.samples(i, 0), interpolate(t, v, 0.01 * static_cast<double>(i)), 1e-12);
  }
  // Hand values: t=0.01 -> 1 + 3*(10/13), t=0.02 -> 4 - 2*(7/18), t=0.03 -> 4 - 2*(17/18).
  EXPECT_NEAR(out.samples(1, 0), 1.0 + 30.0 / 13.0, 1e-12);
  EXPECT_NEAR(out.samples(2, 0), 4.0 - 14.0 / 18.0, 1e-12);
  EXPECT_NEAR(out.samples(3, 0), 4.0 - 34.0 / 18.0, 1e-12);
}

TEST(ResampleLinear, IdentityOnUniformInput) {
  const auto rec = uniform_recording(257);
  const auto out = resample_linear(rec);
  ASSERT_EQ(out.samples.rows(), rec.samples.rows());
  EXPECT_LT((out.samples - rec.samples).cwiseAbs().maxCoeff(), 1e-9);
  EXPECT_LT((out.timestamps - rec.timestamps).cwiseAbs().maxCoeff(), 1e-9);
}

TEST(ResampleLinear, SampleCountProperty) {
  for_all(11, 200, [](auto& rng, int) {
    const int n = uniform_int(rng, 2, 60);
    std::vector<double> t{uniform(rng, -5, 5)}, v{uniform(rng, -1, 1)};
    for (int i = 1; i < n; ++i) {
      t.push_back(t.back() + uniform(rng, 1e-3, 0.05));
      v.push_back(uniform(rng, -1, 1));
    }
    const auto out = resample_linear(make_recording(t, v));
    const auto expected = static_cast<Index>(std::floor((t.back() - t.front()) * 100.0 + 1e-9)) + 1;
    ASSERT_EQ(out.samples.rows(), expected);
    for (Index i = 0; i < out.samples.rows(); ++i) {
      ASSERT_NEAR(out.samples(i, 0), interpolate(t, v, out.timestamps[i]), 1e-9);
    }
  });
}

TEST(ResampleLinear, RejectsBadInput) {
  EXPECT_THROW(resample_linear(make_recording({0}, {1})), InvalidInput);
  EXPECT_THROW(resample_linear(make_recording({0, 0.02, 0.01}, {1, 2, 3})), InvalidInput);
  EXPECT_THROW(resample_linear(make_recording({0, 0.01}, {1, 2}), 0.0), InvalidInput);
}

TEST(SegmentFrames, CountsAndBoundaries) {
  const auto rec = uniform_recording(384);
  const auto frames = segment_frames(rec);
  ASSERT_EQ(frames.size(), 3u);
  for (std::size_t f = 0; f < 3; ++f) {
    EXPECT_EQ(frames[f].source.frame_index, static_cast<Index>(f));
    EXPECT_EQ(frames[f].values.rows(), 128);
    EXPECT_EQ(frames[f].values(0, 1), static_cast<double>(128 * f));
  }
  EXPECT_EQ(segment_frames(uniform_recording(383)).size(), 2u);
  EXPECT_TRUE(segment_frames(uniform_recording(127)).empty());
}

TEST(SegmentFrames, FrameCountProperty) {
  for_all(12, 50, [](auto& rng, int) {
    const Index n = uniform_int(rng, 1, 2000);
    ASSERT_EQ(static_cast<Index>(segment_frames(uniform_recording(n)).size()), n / 128);
  });
}

TEST(Zscore, DegenerateChannelBecomesZero) {
  Frame f{Samples::Constant(128, 3, 5.0), {}};
  f.values.col(1).setLinSpaced(0, 1);
  const auto z = zscore(f);
  EXPECT_TRUE(z.values.col(0).isZero(0));
  EXPECT_TRUE(z.values.col(2).isZero(0));
  EXPECT_FALSE(z.values.col(1).isZero());
}

TEST(Zscore, AlternatingPatternIsFixedPoint) {
  Frame f{Samples(128, 3), {}};
  for (Index i = 0; i < 128; ++i) f.values.row(i).setConstant(i % 2 ? 1.0 : -1.0);
  EXPECT_LT((zscore(f).values - f.values).cwiseAbs().maxCoeff(), 1e-12);
}

TEST(Zscore, RampMatchesDirectStatistics) {
  Frame f{Samples(128, 3), {}};
  for (Index i = 0; i < 128; ++i) f.values.row(i).setConstant(static_cast<double>(i));
  double ss = 0;
  for (int i = 0; i < 128; ++i) ss += (i - 63.5) * (i - 63.5);
  const double sd = std::sqrt(ss / 128.0);
  const auto z = zscore(f);
  for (Index i = 0; i < 128; ++i) EXPECT_NEAR(z.values(i, 0), (static_cast<double>(i) - 63.5) / sd, 1e-12);
}

TEST(Zscore, NormalizesIdempotentlyAndPreservesOrder) {
  for_all(13, 100, [](auto& rng, int) {
    auto f = gaitverify::testing::random_frame(rng);
    f.values.col(2).array() = f.values.col(2).array() * 50.0 + 7.0;
    const auto z = zscore(f);
    for (Index c = 0; c < 3; ++c) {
      const auto col = z.values.col(c);
      const double mean = col.mean();
      const double sd = std::sqrt((col.array() - mean).square().mean());
      ASSERT_LT(std::abs(mean), 1e-5);
      ASSERT_LT(std::abs(sd - 1.0), 1e-3);
      for (Index i = 1; i < 128; ++i) {
        ASSERT_EQ(f.values(i, c) < f.values(i - 1, c), z.values(i, c) < z.values(i - 1, c));
      }
    }
    ASSERT_LT((zscore(z).values - z.values).cwiseAbs().maxCoeff(), 1e-5);
  });
}

TEST(Zscore, RejectsNonFinite) {
  Frame f{Samples::Zero(128, 3), {}};
  f.values(3, 1) = std::nan("");
  EXPECT_THROW(zscore(f), InvalidInput);
}

TEST(CycleStats, MeanMedianCoverage) {
  const std::vector<CycleAnnotation> a{{"s", "1", "r", {0, 100, 210, 330}}};
  const auto s = cycle_stats(a);
  EXPECT_DOUBLE_EQ(s.mean, 110.0);
  EXPECT_DOUBLE_EQ(s.median, 110.0);
  const auto t = cycle_stats({{"s", "1", "r", {0, 90, 180}}, {"s", "1", "q", {10, 140}}});
  EXPECT_NEAR(t.coverage_at(128), 2.0 / 3.0, 1e-15);
  EXPECT_EQ(t.histogram.at(90), 2);
  EXPECT_EQ(t.histogram.at(130), 1);
  EXPECT_THROW(cycle_stats({}), InvalidInput);
}
