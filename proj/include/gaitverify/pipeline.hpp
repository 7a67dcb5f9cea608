#pragma once

#include "gaitverify/augment.hpp"
#include "gaitverify/models.hpp"
#include "gaitverify/nn/train.hpp"

#include <functional>
#include <string>
#include <string_view>
#include <vector>

namespace gaitverify {

/// resample to 100 Hz -> 128-sample frames -> per-frame z-score, recording by recording.
std::vector<Frame> preprocess(const std::vector<RawRecording>& recordings);

enum class TrainMode { e2e, ae };

std::string_view to_string(TrainMode mode);
TrainMode parse_train_mode(std::string_view name);

struct ExtractorConfig {
  TrainMode mode = TrainMode::e2e;
  AugmentationKind augmentation = AugmentationKind::none;
  nn::TrainConfig train;
};

struct ExtractorResult {
  Encoder<float> encoder;
  std::vector<nn::EpochRecord> history;
  int best_epoch = 0;
  std::size_t train_frames = 0;  // before augmentation
  std::size_t augmented_train_frames = 0;
  std::size_t val_frames = 0;
  std::vector<std::string> classes;  // e2e label order (sorted subject ids)
};

/// Frame-level seeded train/validation split, augmentation of the training part only, then
/// training of an FCN classifier (e2e) or autoencoder (ae). Returns the encoder of the
/// checkpoint with the lowest validation loss.
ExtractorResult train_extractor(const std::vector<Frame>& frames, const ExtractorConfig& config,
                                const std::function<void(const nn::EpochRecord&)>& on_epoch = {});

}  // namespace gaitverify
