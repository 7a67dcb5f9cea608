#pragma once

#include "gaitverify/core.hpp"

#include <map>
#include <string>
#include <vector>

namespace gaitverify {

inline constexpr Index kFrameLength = 128;
inline constexpr Index kChannels = 3;
inline constexpr double kTargetRateHz = 100.0;

/// n x 3 acceleration samples, one column per axis.
using Samples = Eigen::Matrix<double, Eigen::Dynamic, 3>;

struct RawRecording {
  std::string subject_id;
  std::string session_id;
  std::string recording_id;
  Eigen::VectorXd timestamps;  // seconds, strictly increasing
  Samples samples;             // same row count as timestamps
};

struct FrameSource {
  std::string subject_id;
  std::string session_id;
  std::string recording_id;
  Index frame_index = 0;

  friend bool operator==(const FrameSource&, const FrameSource&) = default;
  friend auto operator<=>(const FrameSource&, const FrameSource&) = default;
};

/// A fixed-length window of the signal; column c holds axis c.
struct Frame {
  Samples values;
  FrameSource source;
};

/// Sample indices delimiting consecutive gait cycles of one recording.
struct CycleAnnotation {
  std::string subject_id;
  std::string session_id;
  std::string recording_id;
  std::vector<Index> boundaries;
};

struct CycleStats {
  double mean = 0.0;
  double median = 0.0;
  std::map<Index, Index> histogram;  // cycle length -> count
  std::vector<Index> lengths;        // sorted ascending

  /// Fraction of cycles no longer than `length` samples.
  double coverage_at(Index length) const;
};

/// Throws ValidationError if the recording breaks its invariants.
void validate_recording(const RawRecording& rec);

/// Piecewise-linear resampling onto a uniform grid starting at the first timestamp.
RawRecording resample_linear(const RawRecording& rec, double target_hz = kTargetRateHz);

/// Non-overlapping windows; the trailing remainder is dropped. Frames are not normalized.
std::vector<Frame> segment_frames(const RawRecording& rec, Index frame_len = kFrameLength);

/// Per-channel z-score with population statistics. Channels with stdev < 1e-8 become zero.
Frame zscore(const Frame& frame);

CycleStats cycle_stats(const std::vector<CycleAnnotation>& annotations);

}  // namespace gaitverify
