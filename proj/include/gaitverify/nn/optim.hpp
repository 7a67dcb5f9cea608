#pragma once

#include "gaitverify/nn/tensor.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <span>

namespace gaitverify::nn {

struct AdamOptions {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

/// First/second moment accumulators, lazily zero-initialized to the parameter shapes.
template <typename Scalar>
struct AdamState {
  std::vector<Tensor<Scalar>> first_moment;
  std::vector<Tensor<Scalar>> second_moment;
  long step = 0;
};

/// One bias-corrected Adam update of every parameter from its stored gradient.
template <typename Scalar>
void adam_step(std::span<Parameter<Scalar>* const> params, AdamState<Scalar>& state, double lr,
               const AdamOptions& options = {}) {
  if (state.first_moment.empty() && state.step == 0) {
    for (const auto* p : params) {
      state.first_moment.emplace_back(p->value.shape());
      state.second_moment.emplace_back(p->value.shape());
    }
  }
  if (state.first_moment.size() != params.size() || state.second_moment.size() != params.size()) {
    throw InvalidInput("adam_step: optimizer state tracks " + std::to_string(state.first_moment.size()) +
                       " tensors but " + std::to_string(params.size()) + " parameters were given");
  }
  for (std::size_t i = 0; i < params.size(); ++i) {
    const auto& p = *params[i];
    if (p.grad.shape() != p.value.shape() || state.first_moment[i].shape() != p.value.shape()) {
      throw InvalidInput("adam_step: shape mismatch for parameter " + p.name);
    }
  }

  ++state.step;
  const double t = static_cast<double>(state.step);
  const auto b1 = Scalar(options.beta1), b2 = Scalar(options.beta2);
  const auto step_size = Scalar(lr / (1.0 - std::pow(options.beta1, t)));
  const auto v_correction = Scalar(1.0 / (1.0 - std::pow(options.beta2, t)));
  const auto eps = Scalar(options.eps);
  for (std::size_t i = 0; i < params.size(); ++i) {
    auto g = params[i]->grad.data().array();
    auto m = state.first_moment[i].data().array();
    auto v = state.second_moment[i].data().array();
    m = b1 * m + (Scalar(1) - b1) * g;
    v = b2 * v + (Scalar(1) - b2) * g.square();
    params[i]->value.data().array() -= step_size * m / ((v * v_correction).sqrt() + eps);
  }
}

struct PlateauOptions {
  int patience = 50;
  double factor = 0.5;
  double min_lr = 1e-4;
};

/// Halves (by `factor`) the learning rate once the monitored loss has failed to reach a
/// new minimum for `patience` consecutive epochs; never drops below `min_lr` and never
/// raises the rate.
class PlateauSchedule {
 public:
  PlateauSchedule(double lr, const PlateauOptions& options) : lr_(lr), options_(options) {
    if (!(options.factor > 0.0 && options.factor < 1.0)) throw InvalidInput("plateau: factor must be in (0, 1)");
    if (!(options.min_lr > 0.0)) throw InvalidInput("plateau: min_lr must be positive");
    if (options.patience < 1) throw InvalidInput("plateau: patience must be >= 1");
  }

  /// Records one epoch's loss and returns the rate for the next epoch.
  double observe(double loss) {
    if (loss < best_) {
      best_ = loss;
      wait_ = 0;
    } else if (++wait_ >= options_.patience) {
      if (lr_ > options_.min_lr) lr_ = std::max(lr_ * options_.factor, options_.min_lr);
      wait_ = 0;
    }
    return lr_;
  }

  double lr() const { return lr_; }

 private:
  double lr_;
  PlateauOptions options_;
  double best_ = std::numeric_limits<double>::infinity();
  int wait_ = 0;
};

/// Replays `loss_history` through a fresh schedule starting at `lr`.
inline double reduce_lr_on_plateau(std::span<const double> loss_history, double lr,
                                   const PlateauOptions& options = {}) {
  PlateauSchedule schedule(lr, options);
  for (double loss : loss_history) schedule.observe(loss);
  return schedule.lr();
}

}  // namespace gaitverify::nn
