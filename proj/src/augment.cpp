#include "gaitverify/augment.hpp"

#include <string>

namespace gaitverify {

std::string_view to_string(AugmentationKind kind) {
  switch (kind) {
    case AugmentationKind::none:
      return "none";
    case AugmentationKind::random_noise:
      return "rnd";
    case AugmentationKind::circular_shift:
      return "cshift";
  }
  return "none";
}

AugmentationKind parse_augmentation(std::string_view name) {
  if (name == "none") return AugmentationKind::none;
  if (name == "rnd") return AugmentationKind::random_noise;
  if (name == "cshift") return AugmentationKind::circular_shift;
  throw InvalidInput("unknown augmentation '" + std::string(name) + "'");
}

Frame add_uniform_noise(const Frame& frame, Rng& rng, double amplitude) {
  if (!(amplitude > 0.0)) throw InvalidInput("add_uniform_noise: amplitude must be positive");
  std::uniform_real_distribution<double> noise(-amplitude, amplitude);
  Frame out = frame;
  for (Index c = 0; c < out.values.cols(); ++c) {
    for (Index t = 0; t < out.values.rows(); ++t) out.values(t, c) += noise(rng);
  }
  return out;
}

Frame circular_shift(const Frame& frame, Index k) {
  const Index n = frame.values.rows();
  if (k < 2 || k > n - 1) {
    throw InvalidInput("circular_shift: k=" + std::to_string(k) + " outside [2, " +
                       std::to_string(n - 1) + "]");
  }
  const Index head = n - (k - 1);  // samples x_k..x_n
  Frame out{Samples(n, 3), frame.source};
  out.values.topRows(head) = frame.values.bottomRows(head);
  out.values.bottomRows(k - 1) = frame.values.topRows(k - 1);
  return out;
}

std::vector<Frame> augment_dataset(const std::vector<Frame>& frames, AugmentationKind kind, Rng& rng) {
  if (kind == AugmentationKind::none) throw InvalidInput("augment_dataset: kind must not be none");
  std::vector<Frame> out;
  out.reserve(2 * frames.size());
  out.insert(out.end(), frames.begin(), frames.end());
  for (const auto& frame : frames) {
    if (kind == AugmentationKind::circular_shift) {
      std::uniform_int_distribution<Index> pick(2, frame.values.rows() - 1);
      out.push_back(circular_shift(frame, pick(rng)));
    } else {
      out.push_back(add_uniform_noise(frame, rng));
    }
  }
  return out;
}

}  // namespace gaitverify
