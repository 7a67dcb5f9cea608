#pragma once

#include "gaitverify/signal.hpp"

#include <gtest/gtest.h>

#include <cstdint>
#include <random>
#include <string>

namespace gaitverify::testing {

using Rng = std::mt19937_64;

/// Runs `property(rng, case_index)` for `cases` seeded cases; the failing case is named in
/// the GTest trace so it can be replayed.
template <typename Property>
void for_all(std::uint64_t seed, int cases, Property&& property) {
  for (int i = 0; i < cases; ++i) {
    SCOPED_TRACE("property case " + std::to_string(i) + ", seed " + std::to_string(seed));
    Rng rng(seed * 1000003ULL + static_cast<std::uint64_t>(i));
    property(rng, i);
    if (::testing::Test::HasFatalFailure()) return;
  }
}

inline double uniform(Rng& rng, double lo, double hi) { return std::uniform_real_distribution<double>(lo, hi)(rng); }

inline int uniform_int(Rng& rng, int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); }

inline Frame random_frame(Rng& rng, Index length = kFrameLength) {
  Frame f;
  f.values = Samples::NullaryExpr(length, 3, [&] { return uniform(rng, -3.0, 3.0); });
  f.source = {"s001", "1", "r01", 0};
  return f;
}

}  // namespace gaitverify::testing
