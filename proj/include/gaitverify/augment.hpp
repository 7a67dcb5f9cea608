#pragma once

#include "gaitverify/signal.hpp"

#include <random>
#include <string_view>
#include <vector>

namespace gaitverify {

enum class AugmentationKind { none, random_noise, circular_shift };

/// Short CLI names: "none", "rnd", "cshift".
std::string_view to_string(AugmentationKind kind);
AugmentationKind parse_augmentation(std::string_view name);

using Rng = std::mt19937_64;

/// Adds i.i.d. Uniform(-amplitude, amplitude) noise to every sample of every channel.
Frame add_uniform_noise(const Frame& frame, Rng& rng, double amplitude = 0.2);

/// Left circular shift so that (1-based) sample k becomes the first one.
/// Valid for 2 <= k <= n-1; the same shift is applied to every channel.
Frame circular_shift(const Frame& frame, Index k);

/// Returns the input frames followed by one augmented copy of each.
std::vector<Frame> augment_dataset(const std::vector<Frame>& frames, AugmentationKind kind, Rng& rng);

}  // namespace gaitverify
