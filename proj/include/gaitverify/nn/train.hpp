#pragma once

#include "gaitverify/nn/layers.hpp"
#include "gaitverify/nn/optim.hpp"

#include <algorithm>
#include <concepts>
#include <cstdint>
#include <functional>
#include <limits>
#include <numeric>
#include <random>
#include <span>
#include <vector>

namespace gaitverify::nn {

struct TrainConfig {
  int epochs = 100;
  int batch_size = 32;
  double initial_lr = 0.001;
  double plateau_factor = 0.5;
  int plateau_patience = 50;
  double min_lr = 0.0001;
  double val_fraction = 0.4;
  std::uint64_t seed = 0;

  void validate() const {
    if (epochs < 1) throw InvalidInput("train: epochs must be >= 1");
    if (batch_size < 1) throw InvalidInput("train: batch_size must be >= 1");
    if (!(initial_lr >= 0.0)) throw InvalidInput("train: initial_lr must be >= 0");
    if (!(plateau_factor > 0.0 && plateau_factor < 1.0)) throw InvalidInput("train: plateau_factor must be in (0, 1)");
    if (!(min_lr > 0.0)) throw InvalidInput("train: min_lr must be positive");
    if (!(val_fraction > 0.0 && val_fraction < 1.0)) throw InvalidInput("train: val_fraction must be in (0, 1)");
  }
};

/// N samples stacked along the first axis; labels are empty for reconstruction tasks.
template <typename Scalar>
struct Dataset {
  Tensor<Scalar> inputs;
  std::vector<int> labels;

  Index size() const { return inputs.rank() == 0 ? 0 : inputs.dim(0); }
};

/// Copies the samples at `indices` into a new batch tensor.
template <typename Scalar>
Tensor<Scalar> gather(const Tensor<Scalar>& inputs, std::span<const Index> indices) {
  Shape shape = inputs.shape();
  const Index stride = inputs.size() / shape[0];
  shape[0] = static_cast<Index>(indices.size());
  Tensor<Scalar> out(shape);
  for (std::size_t i = 0; i < indices.size(); ++i) {
    out.data().segment(static_cast<Index>(i) * stride, stride) = inputs.data().segment(indices[i] * stride, stride);
  }
  return out;
}

/// What train() needs from a model: the loss of a batch (optionally back-propagated into
/// every Parameter::grad) and the list of trainable parameters.
template <typename Model>
concept Trainable = requires(Model m, const Tensor<typename Model::Scalar>& x, std::span<const int> labels) {
  { m.loss(x, labels, Mode::train, true) } -> std::convertible_to<double>;
  { m.parameters() } -> std::same_as<std::vector<Parameter<typename Model::Scalar>*>>;
};

struct EpochRecord {
  int epoch = 0;  // 1-based
  double train_loss = 0.0;
  double val_loss = 0.0;
  double lr = 0.0;  // rate used during this epoch
};

template <typename Model>
struct TrainResult {
  Model best_model;
  std::vector<EpochRecord> history;
  int best_epoch = 0;
};

/// Index of the first minimum of the validation losses (0-based).
inline std::size_t best_checkpoint(std::span<const EpochRecord> history) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < history.size(); ++i) {
    if (history[i].val_loss < history[best].val_loss) best = i;
  }
  return best;
}

template <Trainable Model>
double evaluate_loss(Model& model, const Dataset<typename Model::Scalar>& data, int batch_size) {
  double total = 0.0;
  std::vector<Index> idx;
  for (Index start = 0; start < data.size(); start += batch_size) {
    const Index stop = std::min<Index>(data.size(), start + batch_size);
    idx.resize(static_cast<std::size_t>(stop - start));
    std::iota(idx.begin(), idx.end(), start);
    std::vector<int> labels;
    for (Index i : idx) {
      if (!data.labels.empty()) labels.push_back(data.labels[static_cast<std::size_t>(i)]);
    }
    total += model.loss(gather(data.inputs, idx), labels, Mode::infer, false) * static_cast<double>(stop - start);
  }
  return total / static_cast<double>(data.size());
}

/// Mini-batch Adam with seeded shuffling. The learning rate follows a plateau schedule on
/// the training loss; the returned model is the snapshot with the lowest validation loss.
template <Trainable Model>
TrainResult<Model> train(Model model, const Dataset<typename Model::Scalar>& train_set,
                         const Dataset<typename Model::Scalar>& val_set, const TrainConfig& config,
                         const std::function<void(const EpochRecord&)>& on_epoch = {}) {
  config.validate();
  if (train_set.size() == 0 || val_set.size() == 0) throw InvalidInput("train: empty training or validation set");
  if (!train_set.labels.empty() && static_cast<Index>(train_set.labels.size()) != train_set.size()) {
    throw InvalidInput("train: label count does not match sample count");
  }

  using Scalar = typename Model::Scalar;
  std::mt19937_64 rng(config.seed);
  AdamState<Scalar> adam;
  PlateauSchedule schedule(config.initial_lr,
                           {config.plateau_patience, config.plateau_factor, config.min_lr});

  TrainResult<Model> result{model, {}, 0};
  double best_val = std::numeric_limits<double>::infinity();
  std::vector<Index> order(static_cast<std::size_t>(train_set.size()));
  std::iota(order.begin(), order.end(), Index{0});

  for (int epoch = 1; epoch <= config.epochs; ++epoch) {
    const double lr = schedule.lr();
    std::shuffle(order.begin(), order.end(), rng);
    double total = 0.0;
    for (std::size_t start = 0; start < order.size(); start += static_cast<std::size_t>(config.batch_size)) {
      const std::size_t stop = std::min(order.size(), start + static_cast<std::size_t>(config.batch_size));
      const std::span<const Index> idx(order.data() + start, stop - start);
      std::vector<int> labels;
      if (!train_set.labels.empty()) {
        for (Index i : idx) labels.push_back(train_set.labels[static_cast<std::size_t>(i)]);
      }
      total += model.loss(gather(train_set.inputs, idx), labels, Mode::train, true) * static_cast<double>(idx.size());
      auto params = model.parameters();
      adam_step<Scalar>(params, adam, lr);
    }
    EpochRecord record{epoch, total / static_cast<double>(order.size()), 0.0, lr};
    record.val_loss = evaluate_loss(model, val_set, config.batch_size);
    result.history.push_back(record);
    if (record.val_loss < best_val) {
      best_val = record.val_loss;
      result.best_model = model;
      result.best_epoch = epoch;
    }
    schedule.observe(record.train_loss);
    if (on_epoch) on_epoch(record);
  }
  return result;
}

}  // namespace gaitverify::nn
