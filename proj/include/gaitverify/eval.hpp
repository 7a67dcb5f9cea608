#pragma once

#include "gaitverify/augment.hpp"
#include "gaitverify/data.hpp"
#include "gaitverify/ocsvm.hpp"

#include <iosfwd>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace gaitverify {

/// P(genuine > impostor) with ties counted one half.
double roc_auc(std::span<const double> genuine, std::span<const double> impostor);

/// Equal error rate. Thresholds are swept over the union of scores with
/// FAR(th) = #{impostor >= th} / n_imp and FRR(th) = #{genuine < th} / n_gen, plus a final
/// threshold above every score. Where FAR - FRR vanishes the common value is returned;
/// otherwise FAR and FRR are interpolated linearly between the two thresholds that
/// bracket the sign change and their crossing value is returned.
double eer(std::span<const double> genuine, std::span<const double> impostor);

struct DecisionScore {
  double value = 0.0;
  FrameSource source;
};

/// Means over consecutive non-overlapping windows; a trailing partial window is dropped.
std::vector<double> aggregate_scores(std::span<const double> scores, int window);

/// Splits `scores` into runs of the same recording (in the given order) and aggregates each.
std::vector<double> aggregate_by_recording(std::span<const DecisionScore> scores, int window);

enum class ProtocolKind { same_day_s1, same_day_s2, cross_day };
enum class ExtractorKind { raw, ae, ee };

std::string_view to_string(ProtocolKind kind);
std::string_view protocol_label(ProtocolKind kind);  // "SD-S1", "SD-S2", "CD"
ProtocolKind parse_protocol(std::string_view name);  // "sd1", "sd2", "cd"
std::string_view to_string(ExtractorKind kind);
ExtractorKind parse_extractor(std::string_view name);

struct ProtocolSpec {
  ProtocolKind kind = ProtocolKind::same_day_s1;
  double train_fraction = 2.0 / 3.0;
  int aggregation_window = 1;
  std::string session1 = "1";
  std::string session2 = "2";
};

struct OcsvmParams {
  OcsvmOptions solver;
  /// Standardize every feature with the enrolment set's mean and stdev before training.
  bool standardize = false;
};

struct UserResult {
  std::string user_id;
  double auc = 0.0;
  double eer = 0.0;
  std::size_t genuine_count = 0;
  std::size_t impostor_count = 0;
};

struct Summary {
  double mean_auc = 0.0;
  double stdev_auc = 0.0;
  double mean_eer = 0.0;
  double stdev_eer = 0.0;
};

/// Arithmetic mean and population stdev across users.
Summary summarize(std::span<const UserResult> users);

/// Metrics are fractions in [0, 1]; the text summary converts them to percent.
struct EvalReport {
  ProtocolSpec protocol;
  ExtractorKind features = ExtractorKind::raw;
  AugmentationKind augmentation = AugmentationKind::none;
  std::vector<UserResult> users;
  Summary summary;
  /// Users that could not be evaluated, with the reason.
  std::vector<std::string> warnings;
};

/// Per-user enrolment with a one-class SVM and genuine/impostor scoring.
///
/// Same-day: the first train_fraction of a user's frames in the session (recording, then
/// frame order) enrol the user; the rest are genuine probes and every frame of every other
/// subject in that session is an impostor probe. Cross-day: all session-1 frames enrol,
/// session-2 frames of the user are genuine and all other session-2 frames are impostors.
/// Scores are averaged over `aggregation_window` consecutive frames of a recording for both
/// classes before computing AUC and EER.
EvalReport run_protocol(std::span<const FeatureVector> features, ExtractorKind extractor, const ProtocolSpec& spec,
                        const OcsvmParams& params, AugmentationKind augmentation = AugmentationKind::none);

/// user_id,auc,eer rows followed by "mean" and "stdev" footer rows.
void write_report_csv(const EvalReport& report, std::ostream& out);

/// Table layout: Features, Augmentation, Evaluation, Window, Avg AUC[%] (stdev), Avg EER[%] (stdev).
std::string format_summary_table(std::span<const EvalReport> reports);

/// SHA-256 of the CSV rendering.
std::string report_digest(const EvalReport& report);

}  // namespace gaitverify
