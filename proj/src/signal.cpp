#include "gaitverify/signal.hpp"

#include <algorithm>
#include <cmath>

namespace gaitverify {

namespace {

constexpr double kDegenerateStdev = 1e-8;
// Absorbs rounding in (t_last - t_first) * rate so exact grids keep their last sample.
constexpr double kGridSlack = 1e-9;

std::string describe(const RawRecording& rec) {
  return rec.subject_id + "/" + rec.session_id + "/" + rec.recording_id;
}

}  // namespace

void validate_recording(const RawRecording& rec) {
  if (rec.timestamps.size() == 0) {
    throw ValidationError("recording " + describe(rec) + " has no samples");
  }
  if (rec.timestamps.size() != rec.samples.rows()) {
    throw ValidationError("recording " + describe(rec) + ": timestamp/sample count mismatch");
  }
  if (!rec.timestamps.allFinite() || !rec.samples.allFinite()) {
    throw ValidationError("recording " + describe(rec) + " contains non-finite values");
  }
  for (Index i = 1; i < rec.timestamps.size(); ++i) {
    if (!(rec.timestamps[i] > rec.timestamps[i - 1])) {
      throw ValidationError("recording " + describe(rec) +
                            ": timestamps not strictly increasing at sample " + std::to_string(i));
    }
  }
}

RawRecording resample_linear(const RawRecording& rec, double target_hz) {
  if (!(target_hz > 0.0)) throw InvalidInput("resample_linear: target rate must be positive");
  if (rec.timestamps.size() < 2) throw InvalidInput("resample_linear: need at least 2 samples");
  validate_recording(rec);

  const Index n_in = rec.timestamps.size();
  const double t0 = rec.timestamps[0];
  const double span = rec.timestamps[n_in - 1] - t0;
  const Index n_out = static_cast<Index>(std::floor(span * target_hz + kGridSlack)) + 1;

  RawRecording out{rec.subject_id, rec.session_id, rec.recording_id, Eigen::VectorXd(n_out),
                   Samples(n_out, 3)};
  Index j = 0;
  for (Index i = 0; i < n_out; ++i) {
    const double t = t0 + static_cast<double>(i) / target_hz;
    while (j + 2 < n_in && rec.timestamps[j + 1] <= t) ++j;
    const double ta = rec.timestamps[j];
    const double tb = rec.timestamps[j + 1];
    const double w = std::clamp((t - ta) / (tb - ta), 0.0, 1.0);
    out.timestamps[i] = t;
    out.samples.row(i) = (1.0 - w) * rec.samples.row(j) + w * rec.samples.row(j + 1);
  }
  return out;
}

std::vector<Frame> segment_frames(const RawRecording& rec, Index frame_len) {
  if (frame_len < 1) throw InvalidInput("segment_frames: frame length must be positive");
  std::vector<Frame> frames;
  const Index count = rec.samples.rows() / frame_len;
  frames.reserve(static_cast<std::size_t>(count));
  for (Index f = 0; f < count; ++f) {
    frames.push_back(Frame{rec.samples.middleRows(f * frame_len, frame_len),
                           FrameSource{rec.subject_id, rec.session_id, rec.recording_id, f}});
  }
  return frames;
}

Frame zscore(const Frame& frame) {
  if (!frame.values.allFinite()) throw InvalidInput("zscore: frame contains non-finite values");
  if (frame.values.rows() == 0) throw InvalidInput("zscore: empty frame");
  Frame out{Samples(frame.values.rows(), 3), frame.source};
  const double n = static_cast<double>(frame.values.rows());
  for (Index c = 0; c < 3; ++c) {
    const auto channel = frame.values.col(c).array();
    const double mean = channel.sum() / n;
    const double stdev = std::sqrt((channel - mean).square().sum() / n);
    if (stdev < kDegenerateStdev) {
      out.values.col(c).setZero();
    } else {
      out.values.col(c) = ((channel - mean) / stdev).matrix();
    }
  }
  return out;
}

double CycleStats::coverage_at(Index length) const {
  if (lengths.empty()) return 0.0;
  const auto covered = std::upper_bound(lengths.begin(), lengths.end(), length) - lengths.begin();
  return static_cast<double>(covered) / static_cast<double>(lengths.size());
}

CycleStats cycle_stats(const std::vector<CycleAnnotation>& annotations) {
  CycleStats stats;
  for (const auto& a : annotations) {
    for (std::size_t i = 1; i < a.boundaries.size(); ++i) {
      const Index len = a.boundaries[i] - a.boundaries[i - 1];
      if (len < 1) {
        throw InvalidInput("cycle_stats: boundaries of " + a.subject_id + "/" + a.session_id + "/" +
                           a.recording_id + " are not strictly increasing");
      }
      stats.lengths.push_back(len);
    }
  }
  if (stats.lengths.empty()) throw InvalidInput("cycle_stats: no cycles");

  std::sort(stats.lengths.begin(), stats.lengths.end());
  double total = 0.0;
  for (Index len : stats.lengths) {
    total += static_cast<double>(len);
    ++stats.histogram[len];
  }
  const std::size_t n = stats.lengths.size();
  stats.mean = total / static_cast<double>(n);
  stats.median = n % 2 == 1 ? static_cast<double>(stats.lengths[n / 2])
                            : 0.5 * static_cast<double>(stats.lengths[n / 2 - 1] + stats.lengths[n / 2]);
  return stats;
}

}  // namespace gaitverify
