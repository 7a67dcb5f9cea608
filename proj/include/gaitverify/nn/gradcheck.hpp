#pragma once

#include "gaitverify/nn/train.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <string>
#include <type_traits>

namespace gaitverify::nn {

struct GradCheckOptions {
  double epsilon = 1e-5;
  /// Tensors with more entries are checked on a seeded random subset of this size.
  Index max_entries_per_tensor = 32;
  /// Gradients below this magnitude are compared on an absolute rather than relative scale.
  /// Conv biases feeding batch norm have an exactly zero gradient, and their finite
  /// differences are rounding noise of order 1e-10.
  double magnitude_floor = 1e-5;
  std::uint64_t seed = 0;
  /// A difference whose +/- probes switch some ReLU is retried with a step this many
  /// times smaller, up to `max_refinements` times.
  double refinement_factor = 10.0;
  int max_refinements = 2;
  /// Test hook: the analytic gradient of this tensor is perturbed before comparison.
  std::string corrupt_tensor;
};

struct TensorCheck {
  std::string name;
  Index checked = 0;
  Index total = 0;
  /// Entries whose finite difference straddled a ReLU kink at every step size tried.
  Index skipped = 0;
  double max_rel_error = 0.0;
};

struct GradCheckReport {
  std::vector<TensorCheck> tensors;
  double max_rel_error = 0.0;
};

/// |a - n| / max(|a|, |n|, floor).
inline double relative_error(double analytic, double numeric, double floor) {
  return std::abs(analytic - numeric) / std::max({std::abs(analytic), std::abs(numeric), floor});
}

/// Compares back-propagated gradients of the batch loss against central differences for
/// every parameter tensor of a double-precision model (train-mode loss, so batch-norm
/// statistics are part of the differentiated function).
///
/// The loss is only piecewise smooth. When x +/- eps lands on a different set of active
/// ReLUs than x, the central difference measures a kink rather than the derivative, so the
/// step is refined; entries that never settle are reported as skipped.
template <Trainable Model>
GradCheckReport gradient_check(Model& model, const Tensor<double>& inputs, std::span<const int> labels,
                               const GradCheckOptions& options = {}) {
  static_assert(std::is_same_v<typename Model::Scalar, double>, "gradient_check needs a double-precision model");
  if (!(options.epsilon > 0.0)) throw InvalidInput("gradient_check: epsilon must be positive");

  ReluPatternProbe probe;
  model.loss(inputs, labels, Mode::train, true);
  const std::uint64_t base_pattern = probe.value();
  auto params = model.parameters();
  std::vector<Tensor<double>> analytic;
  analytic.reserve(params.size());
  for (const auto* p : params) analytic.push_back(p->grad);

  std::mt19937_64 rng(options.seed);
  GradCheckReport report;
  for (std::size_t pi = 0; pi < params.size(); ++pi) {
    auto& value = params[pi]->value.data();
    const Index total = value.size();
    std::vector<Index> entries(static_cast<std::size_t>(total));
    std::iota(entries.begin(), entries.end(), Index{0});
    if (total > options.max_entries_per_tensor) {
      std::shuffle(entries.begin(), entries.end(), rng);
      entries.resize(static_cast<std::size_t>(options.max_entries_per_tensor));
      std::sort(entries.begin(), entries.end());
    }
    const bool corrupt = params[pi]->name == options.corrupt_tensor;

    TensorCheck check{params[pi]->name, static_cast<Index>(entries.size()), total, 0, 0.0};
    for (Index e : entries) {
      const double saved = value[e];
      double numeric = 0.0;
      bool smooth = false;
      double eps = options.epsilon;
      for (int attempt = 0; attempt <= options.max_refinements && !smooth; ++attempt, eps /= options.refinement_factor) {
        probe.reset();
        value[e] = saved + eps;
        const double plus = model.loss(inputs, labels, Mode::train, false);
        const bool plus_same = probe.value() == base_pattern;
        probe.reset();
        value[e] = saved - eps;
        const double minus = model.loss(inputs, labels, Mode::train, false);
        smooth = plus_same && probe.value() == base_pattern;
        value[e] = saved;
        numeric = (plus - minus) / (2.0 * eps);
      }
      if (!smooth) {
        ++check.skipped;
        continue;
      }
      double a = analytic[pi].data()[e];
      if (corrupt) a = 1.01 * a + 1e-3;
      check.max_rel_error = std::max(check.max_rel_error, relative_error(a, numeric, options.magnitude_floor));
    }
    report.max_rel_error = std::max(report.max_rel_error, check.max_rel_error);
    report.tensors.push_back(std::move(check));
  }
  return report;
}

}  // namespace gaitverify::nn
