#include "gaitverify/models.hpp"

namespace gaitverify {

std::vector<FeatureVector> extract_features(const Encoder<float>& encoder, std::span<const Frame> frames) {
  if (!encoder.finalized()) {
    throw InvalidState("extract_features: encoder has no finalized batch-norm running statistics");
  }
  std::vector<FeatureVector> out;
  out.reserve(frames.size());
  // One frame per pass keeps every vector independent of how the frames are batched.
  for (const auto& frame : frames) {
    const auto features = encoder.infer(frames_to_tensor<float>(std::span(&frame, 1)));
    out.push_back(FeatureVector{frame.source, features.data().cast<double>()});
  }
  return out;
}

Eigen::VectorXd raw_features(const Frame& frame) {
  const Index length = frame.values.rows();
  Eigen::VectorXd v(length * kChannels);
  for (Index c = 0; c < kChannels; ++c) v.segment(c * length, length) = frame.values.col(c);
  return v;
}

std::vector<FeatureVector> raw_features(std::span<const Frame> frames) {
  std::vector<FeatureVector> out;
  out.reserve(frames.size());
  for (const auto& frame : frames) out.push_back(FeatureVector{frame.source, raw_features(frame)});
  return out;
}

ModelContainer encoder_to_container(const Encoder<float>& encoder) {
  auto c = to_container(encoder, kEncoderArchitecture);
  c.metadata["feature_dim"] = std::to_string(kFeatureDim);
  c.metadata["bn_finalized"] = encoder.finalized() ? "1" : "0";
  return c;
}

Encoder<float> encoder_from_container(const ModelContainer& container) {
  const auto arch = container.metadata.find("architecture");
  if (arch == container.metadata.end() || arch->second != kEncoderArchitecture) {
    throw FormatError("container does not hold an encoder (architecture '" +
                      (arch == container.metadata.end() ? std::string() : arch->second) + "')");
  }
  Encoder<float> encoder;
  load_tensors(encoder, container);
  const auto fin = container.metadata.find("bn_finalized");
  if (fin != container.metadata.end() && fin->second == "1") encoder.mark_finalized();
  return encoder;
}

}  // namespace gaitverify
