#include "gaitverify/data.hpp"

#include <Eigen/Geometry>

#include <cmath>
#include <cstdio>
#include <numbers>
#include <random>

namespace gaitverify {

namespace {

constexpr double kMinStepHz = 1.6;
constexpr double kMaxStepHz = 2.4;
constexpr double kNoiseToRms = 0.1;
// Within-session variability between recordings of the same subject.
constexpr double kRecordingFrequencyJitter = 0.02;
constexpr double kRecordingAmplitudeJitter = 0.05;
// Subject-to-subject spread around the population template: log-amplitude and phase (rad).
constexpr double kSubjectAmplitudeSpread = 0.15;
constexpr double kSubjectPhaseSpread = 0.25;
// Within-recording variability: relative standard deviations of the cycle rate and of each
// harmonic's amplitude, and their correlation time in seconds.
constexpr double kTempoVariability = 0.1;
constexpr double kAmplitudeVariability = 0.2;
constexpr double kVariabilityTimeConstant = 1.0;
// Standard deviation (rad) of the per-recording device rotation.
constexpr double kPlacementJitter = 0.4;

std::string subject_name(const SyntheticConfig& config, int subject) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%03d", subject + 1);
  return config.subject_prefix + buf;
}

std::string recording_name(int recording) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "r%02d", recording + 1);
  return buf;
}

}  // namespace

void SyntheticConfig::validate() const {
  if (num_subjects < 1) throw InvalidInput("synthetic: num_subjects must be >= 1");
  if (recordings_per_subject_per_session < 1) throw InvalidInput("synthetic: recordings per session must be >= 1");
  if (!(recording_seconds > 0.0)) throw InvalidInput("synthetic: recording_seconds must be positive");
  if (sessions != 1 && sessions != 2) throw InvalidInput("synthetic: sessions must be 1 or 2");
  if (!(cross_day_drift >= 0.0 && cross_day_drift <= 1.0)) throw InvalidInput("synthetic: drift must be in [0, 1]");
}

std::vector<std::vector<SubjectProfile>> synthetic_profiles(const SyntheticConfig& config) {
  config.validate();
  std::mt19937_64 rng(config.seed);
  std::uniform_real_distribution<double> freq(kMinStepHz, kMaxStepHz);
  std::uniform_real_distribution<double> amp(0.2, 1.0);
  std::uniform_real_distribution<double> phase(0.0, 2.0 * std::numbers::pi);
  std::uniform_real_distribution<double> unit(-0.5, 0.5);

  // Subjects deviate from a shared population gait template.
  SubjectProfile tmpl;
  for (Index c = 0; c < 3; ++c) {
    for (Index h = 0; h < kHarmonics; ++h) {
      tmpl.amplitudes(c, h) = amp(rng);
      tmpl.phases(c, h) = phase(rng);
    }
  }
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::vector<std::vector<SubjectProfile>> profiles(static_cast<std::size_t>(config.num_subjects));
  for (auto& per_session : profiles) {
    SubjectProfile base;
    base.step_frequency_hz = freq(rng);
    for (Index c = 0; c < 3; ++c) {
      for (Index h = 0; h < kHarmonics; ++h) {
        base.amplitudes(c, h) = tmpl.amplitudes(c, h) * std::exp(kSubjectAmplitudeSpread * gauss(rng));
        base.phases(c, h) = tmpl.phases(c, h) + kSubjectPhaseSpread * gauss(rng);
      }
    }
    per_session.push_back(base);
    if (config.sessions == 2) {
      // Drift draws are consumed even when drift == 0 so the stream layout is fixed.
      SubjectProfile second = base;
      for (Index c = 0; c < 3; ++c) {
        for (Index h = 0; h < kHarmonics; ++h) {
          second.amplitudes(c, h) *= 1.0 + config.cross_day_drift * unit(rng);
          second.phases(c, h) += config.cross_day_drift * std::numbers::pi * unit(rng);
        }
      }
      per_session.push_back(second);
    }
  }
  return profiles;
}

std::vector<RawRecording> generate_synthetic(const SyntheticConfig& config) {
  const auto profiles = synthetic_profiles(config);
  const auto n = static_cast<Index>(std::floor(config.recording_seconds * kTargetRateHz + 1e-9));
  if (n < 2) throw InvalidInput("synthetic: recordings must contain at least 2 samples");

  std::vector<RawRecording> out;
  for (int s = 0; s < config.num_subjects; ++s) {
    for (int session = 0; session < config.sessions; ++session) {
      const auto& profile = profiles[static_cast<std::size_t>(s)][static_cast<std::size_t>(session)];
      for (int r = 0; r < config.recordings_per_subject_per_session; ++r) {
        std::seed_seq seq{config.seed, std::uint64_t(s), std::uint64_t(session), std::uint64_t(r), std::uint64_t(0x9a17)};
        std::mt19937_64 rng(seq);
        std::normal_distribution<double> gauss(0.0, 1.0);
        std::uniform_real_distribution<double> offset(-1.0, 1.0);
        std::uniform_real_distribution<double> start(0.0, 10.0);

        const double cycle_hz = 0.5 * profile.step_frequency_hz * (1.0 + kRecordingFrequencyJitter * gauss(rng));
        const double t_start = start(rng);
        RawRecording rec{subject_name(config, s), std::to_string(session + 1), recording_name(r),
                         Eigen::VectorXd(n), Samples(n, 3)};
        for (Index i = 0; i < n; ++i) rec.timestamps[i] = static_cast<double>(i) / kTargetRateHz;

        // Stride-to-stride variability: the cycle rate and every harmonic's amplitude wander
        // as stationary AR(1) processes, so no two strides are identical.
        const double dt = 1.0 / kTargetRateHz;
        const double rho = std::exp(-dt / kVariabilityTimeConstant);
        const double innovation = std::sqrt(1.0 - rho * rho);
        Eigen::VectorXd phase(n);
        double tempo = gauss(rng);
        double cycle_phase = 2.0 * std::numbers::pi * cycle_hz * t_start;
        for (Index i = 0; i < n; ++i) {
          phase[i] = cycle_phase;
          cycle_phase += 2.0 * std::numbers::pi * cycle_hz * (1.0 + kTempoVariability * tempo) * dt;
          tempo = rho * tempo + innovation * gauss(rng);
        }

        for (Index c = 0; c < 3; ++c) {
          Eigen::VectorXd clean = Eigen::VectorXd::Zero(n);
          for (Index h = 0; h < kHarmonics; ++h) {
            const double a = profile.amplitudes(c, h) * (1.0 + kRecordingAmplitudeJitter * gauss(rng));
            const double k = static_cast<double>(h + 1);
            double wander = gauss(rng);
            for (Index i = 0; i < n; ++i) {
              clean[i] += a * (1.0 + kAmplitudeVariability * wander) * std::sin(k * phase[i] + profile.phases(c, h));
              wander = rho * wander + innovation * gauss(rng);
            }
          }
          const double sigma = kNoiseToRms * std::sqrt(clean.squaredNorm() / static_cast<double>(n));
          const double gravity = offset(rng);
          for (Index i = 0; i < n; ++i) rec.samples(i, c) = gravity + clean[i] + sigma * gauss(rng);
        }
        // The device sits slightly differently in every recording.
        const Eigen::Vector3d axis(gauss(rng), gauss(rng), gauss(rng));
        const Eigen::Matrix3d rot =
            Eigen::AngleAxisd(kPlacementJitter * gauss(rng), axis.normalized()).toRotationMatrix();
        rec.samples = (rec.samples * rot.transpose()).eval();
        out.push_back(std::move(rec));
      }
    }
  }
  return out;
}

}  // namespace gaitverify
