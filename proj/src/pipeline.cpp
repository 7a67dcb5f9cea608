#include "gaitverify/pipeline.hpp"

#include <algorithm>
#include <map>
#include <numeric>

namespace gaitverify {

std::vector<Frame> preprocess(const std::vector<RawRecording>& recordings) {
  std::vector<Frame> out;
  for (const auto& rec : recordings) {
    for (const auto& frame : segment_frames(resample_linear(rec))) out.push_back(zscore(frame));
  }
  return out;
}

std::string_view to_string(TrainMode mode) { return mode == TrainMode::e2e ? "e2e" : "ae"; }

TrainMode parse_train_mode(std::string_view name) {
  if (name == "e2e") return TrainMode::e2e;
  if (name == "ae") return TrainMode::ae;
  throw InvalidInput("unknown training mode '" + std::string(name) + "' (expected e2e or ae)");
}

namespace {

nn::Dataset<float> make_dataset(const std::vector<Frame>& frames, const std::map<std::string, int>* classes) {
  nn::Dataset<float> d{frames_to_tensor<float>(frames), {}};
  if (classes) {
    for (const auto& f : frames) d.labels.push_back(classes->at(f.source.subject_id));
  }
  return d;
}

}  // namespace

ExtractorResult train_extractor(const std::vector<Frame>& frames, const ExtractorConfig& config,
                                const std::function<void(const nn::EpochRecord&)>& on_epoch) {
  config.train.validate();
  if (frames.size() < 10) {
    throw InvalidInput("train: need at least 10 frames, got " + std::to_string(frames.size()));
  }
  std::map<std::string, int> classes;
  for (const auto& f : frames) classes.emplace(f.source.subject_id, 0);
  if (config.mode == TrainMode::e2e && classes.size() < 2) {
    throw InvalidInput("train: end-to-end training needs at least 2 subjects");
  }
  ExtractorResult result;
  for (auto& [id, label] : classes) {
    label = static_cast<int>(result.classes.size());
    if (config.mode == TrainMode::e2e) result.classes.push_back(id);
  }

  // Independent streams for the split, augmentation, initialization and batching.
  std::seed_seq seq{config.train.seed, std::uint64_t{0x5eed}};
  std::array<std::uint64_t, 3> seeds{};
  seq.generate(seeds.begin(), seeds.end());

  std::vector<std::size_t> order(frames.size());
  std::iota(order.begin(), order.end(), std::size_t{0});
  Rng split_rng(seeds[0]);
  std::shuffle(order.begin(), order.end(), split_rng);
  auto n_val = static_cast<std::size_t>(config.train.val_fraction * static_cast<double>(frames.size()));
  n_val = std::clamp<std::size_t>(n_val, 1, frames.size() - 1);
  std::vector<Frame> train_frames, val_frames;
  for (std::size_t i = 0; i < order.size(); ++i) {
    (i < frames.size() - n_val ? train_frames : val_frames).push_back(frames[order[i]]);
  }
  result.train_frames = train_frames.size();
  result.val_frames = val_frames.size();

  Rng augment_rng(seeds[1]);
  if (config.augmentation != AugmentationKind::none) {
    train_frames = augment_dataset(train_frames, config.augmentation, augment_rng);
  }
  result.augmented_train_frames = train_frames.size();

  const bool labelled = config.mode == TrainMode::e2e;
  const auto train_set = make_dataset(train_frames, labelled ? &classes : nullptr);
  const auto val_set = make_dataset(val_frames, labelled ? &classes : nullptr);
  nn::TrainConfig tc = config.train;
  tc.seed = seeds[2];

  if (labelled) {
    auto trained = nn::train(build_fcn<float>(static_cast<Index>(classes.size()), config.train.seed), train_set,
                             val_set, tc, on_epoch);
    result.encoder = strip_classifier(trained.best_model);
    result.history = std::move(trained.history);
    result.best_epoch = trained.best_epoch;
  } else {
    auto trained = nn::train(build_autoencoder<float>(config.train.seed), train_set, val_set, tc, on_epoch);
    result.encoder = trained.best_model.encoder;
    result.history = std::move(trained.history);
    result.best_epoch = trained.best_epoch;
  }
  return result;
}

}  // namespace gaitverify
