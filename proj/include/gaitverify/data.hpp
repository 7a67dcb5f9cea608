#pragma once

#include "gaitverify/signal.hpp"

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <map>
#include <string>
#include <string_view>
#include <vector>

namespace gaitverify {

// ---------------------------------------------------------------------------
// Canonical gait CSV: subject,session,recording,t,ax,ay,az
// ---------------------------------------------------------------------------

inline constexpr const char* kCanonicalHeader = "subject,session,recording,t,ax,ay,az";

/// One recording per contiguous (subject, session, recording) group, in file order.
std::vector<RawRecording> read_canonical_csv(std::istream& in);
std::vector<RawRecording> load_canonical_csv(const std::filesystem::path& path);

void write_canonical_csv(const std::vector<RawRecording>& recordings, std::ostream& out);
void write_canonical_csv(const std::vector<RawRecording>& recordings, const std::filesystem::path& path);

/// Annotation CSV: subject,session,recording,boundaries (boundaries space-separated).
std::vector<CycleAnnotation> load_cycle_annotations(const std::filesystem::path& path);
std::vector<CycleAnnotation> read_cycle_annotations(std::istream& in);

// ---------------------------------------------------------------------------
// Synthetic gait generator
// ---------------------------------------------------------------------------

struct SyntheticConfig {
  int num_subjects = 10;
  int recordings_per_subject_per_session = 2;
  double recording_seconds = 60.0;
  int sessions = 2;
  std::uint64_t seed = 7;
  double cross_day_drift = 0.3;
  /// Prefix for generated subject ids ("s" -> s001, s002, ...).
  std::string subject_prefix = "s";

  void validate() const;
};

inline constexpr int kHarmonics = 3;

/// Generator parameters of one subject in one session.
struct SubjectProfile {
  double step_frequency_hz = 2.0;
  Eigen::Matrix<double, 3, kHarmonics> amplitudes;
  Eigen::Matrix<double, 3, kHarmonics> phases;
};

/// Per-subject gait profiles in subject order, one entry per session. Amplitudes and phases
/// scatter around a population template drawn from the same seed, so subjects resemble each
/// other the way human gaits do.
std::vector<std::vector<SubjectProfile>> synthetic_profiles(const SyntheticConfig& config);

/// Harmonic gait-like signals sampled at 100 Hz: harmonic h of axis c oscillates at
/// h * step_frequency / 2 (one gait cycle spans two steps), plus Gaussian noise with
/// sigma = 0.1 * signal RMS. Session 2 profiles are perturbed by cross_day_drift.
///
/// Strides are not identical: the cycle rate (10%) and every harmonic amplitude (20%) wander
/// as AR(1) processes with a 1 s correlation time, and each recording applies a small random
/// rotation of the device axes.
std::vector<RawRecording> generate_synthetic(const SyntheticConfig& config);

// ---------------------------------------------------------------------------
// Model container ("GVF1")
// ---------------------------------------------------------------------------

inline constexpr char kContainerMagic[4] = {'G', 'V', 'F', '1'};
inline constexpr std::uint32_t kContainerVersion = 1;

struct ContainerEntry {
  std::string name;
  std::vector<std::uint64_t> shape;
  std::vector<float> values;  // row-major

  friend bool operator==(const ContainerEntry&, const ContainerEntry&) = default;
};

struct ModelContainer {
  std::vector<ContainerEntry> entries;
  std::map<std::string, std::string> metadata;

  const ContainerEntry* find(const std::string& name) const;

  friend bool operator==(const ModelContainer&, const ModelContainer&) = default;
};

std::vector<std::uint8_t> serialize_container(const ModelContainer& container);
ModelContainer parse_container(const std::vector<std::uint8_t>& bytes);

void save_model(const ModelContainer& container, const std::filesystem::path& path);
ModelContainer load_model(const std::filesystem::path& path);

// ---------------------------------------------------------------------------
// Feature CSV: subject,session,recording,frame,f0..f{d-1}
// ---------------------------------------------------------------------------

struct FeatureVector {
  FrameSource source;
  Eigen::VectorXd values;
};

void write_features_csv(const std::vector<FeatureVector>& features, std::ostream& out);
void export_features_csv(const std::vector<FeatureVector>& features, const std::filesystem::path& path);
std::vector<FeatureVector> read_features_csv(std::istream& in);
std::vector<FeatureVector> load_features_csv(const std::filesystem::path& path);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_real(double value);
/// Inverse of format_real; throws ParseError on anything but a complete number.
double parse_real(std::string_view text);

/// Lower-case hex SHA-256 of a byte string / file.
std::string sha256_hex(std::string_view bytes);
std::string sha256_file(const std::filesystem::path& path);

}  // namespace gaitverify
