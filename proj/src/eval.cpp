#include "gaitverify/eval.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <future>
#include <map>
#include <sstream>
#include <thread>

namespace gaitverify {

namespace {

void require_scores(std::span<const double> genuine, std::span<const double> impostor, const char* who) {
  if (genuine.empty() || impostor.empty()) {
    throw InvalidInput(std::string(who) + ": genuine and impostor score sets must be non-empty");
  }
}

}  // namespace

double roc_auc(std::span<const double> genuine, std::span<const double> impostor) {
  require_scores(genuine, impostor, "roc_auc");
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::sort(imp.begin(), imp.end());
  // Twice the count of correctly ordered pairs, ties contributing 1; integer exact.
  long long twice_wins = 0;
  for (double g : genuine) {
    const auto lo = std::lower_bound(imp.begin(), imp.end(), g);
    const auto hi = std::upper_bound(lo, imp.end(), g);
    twice_wins += 2 * (lo - imp.begin()) + (hi - lo);
  }
  return static_cast<double>(twice_wins) /
         (2.0 * static_cast<double>(genuine.size()) * static_cast<double>(impostor.size()));
}

double eer(std::span<const double> genuine, std::span<const double> impostor) {
  require_scores(genuine, impostor, "eer");
  std::vector<double> gen(genuine.begin(), genuine.end());
  std::vector<double> imp(impostor.begin(), impostor.end());
  std::sort(gen.begin(), gen.end());
  std::sort(imp.begin(), imp.end());
  std::vector<double> thresholds(gen);
  thresholds.insert(thresholds.end(), imp.begin(), imp.end());
  std::sort(thresholds.begin(), thresholds.end());
  thresholds.erase(std::unique(thresholds.begin(), thresholds.end()), thresholds.end());

  const auto n_gen = static_cast<double>(gen.size());
  const auto n_imp = static_cast<double>(imp.size());
  auto rates = [&](double th) {
    const double far = static_cast<double>(imp.end() - std::lower_bound(imp.begin(), imp.end(), th)) / n_imp;
    const double frr = static_cast<double>(std::lower_bound(gen.begin(), gen.end(), th) - gen.begin()) / n_gen;
    return std::pair{far, frr};
  };

  // FAR - FRR is non-increasing in the threshold; it starts at 1 and ends at -1.
  double prev_far = 1.0, prev_frr = 0.0;
  for (std::size_t k = 0; k <= thresholds.size(); ++k) {
    const auto [far, frr] = k < thresholds.size() ? rates(thresholds[k]) : std::pair{0.0, 1.0};
    const double diff = far - frr;
    if (diff == 0.0) return far;
    if (diff < 0.0) {
      const double prev_diff = prev_far - prev_frr;
      const double w = prev_diff / (prev_diff - diff);
      return prev_far + w * (far - prev_far);
    }
    prev_far = far;
    prev_frr = frr;
  }
  return 0.5;  // unreachable: the sentinel threshold always has FAR - FRR = -1
}

std::vector<double> aggregate_scores(std::span<const double> scores, int window) {
  if (window < 1) throw InvalidInput("aggregate_scores: window must be >= 1");
  std::vector<double> out;
  const auto w = static_cast<std::size_t>(window);
  for (std::size_t start = 0; start + w <= scores.size(); start += w) {
    double sum = 0.0;
    for (std::size_t i = start; i < start + w; ++i) sum += scores[i];
    out.push_back(sum / static_cast<double>(window));
  }
  return out;
}

std::vector<double> aggregate_by_recording(std::span<const DecisionScore> scores, int window) {
  if (window < 1) throw InvalidInput("aggregate_scores: window must be >= 1");
  std::vector<double> out;
  std::vector<double> run;
  auto same_recording = [](const FrameSource& a, const FrameSource& b) {
    return a.subject_id == b.subject_id && a.session_id == b.session_id && a.recording_id == b.recording_id;
  };
  for (std::size_t i = 0; i < scores.size(); ++i) {
    if (i > 0 && !same_recording(scores[i].source, scores[i - 1].source)) {
      const auto agg = aggregate_scores(run, window);
      out.insert(out.end(), agg.begin(), agg.end());
      run.clear();
    }
    run.push_back(scores[i].value);
  }
  const auto agg = aggregate_scores(run, window);
  out.insert(out.end(), agg.begin(), agg.end());
  return out;
}

std::string_view to_string(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::same_day_s1:
      return "sd1";
    case ProtocolKind::same_day_s2:
      return "sd2";
    case ProtocolKind::cross_day:
      return "cd";
  }
  return "sd1";
}

std::string_view protocol_label(ProtocolKind kind) {
  switch (kind) {
    case ProtocolKind::same_day_s1:
      return "SD-S1";
    case ProtocolKind::same_day_s2:
      return "SD-S2";
    case ProtocolKind::cross_day:
      return "CD";
  }
  return "SD-S1";
}

ProtocolKind parse_protocol(std::string_view name) {
  if (name == "sd1") return ProtocolKind::same_day_s1;
  if (name == "sd2") return ProtocolKind::same_day_s2;
  if (name == "cd") return ProtocolKind::cross_day;
  throw InvalidInput("unknown protocol '" + std::string(name) + "' (expected sd1, sd2 or cd)");
}

std::string_view to_string(ExtractorKind kind) {
  switch (kind) {
    case ExtractorKind::raw:
      return "raw";
    case ExtractorKind::ae:
      return "ae";
    case ExtractorKind::ee:
      return "ee";
  }
  return "raw";
}

ExtractorKind parse_extractor(std::string_view name) {
  if (name == "raw") return ExtractorKind::raw;
  if (name == "ae") return ExtractorKind::ae;
  if (name == "ee") return ExtractorKind::ee;
  throw InvalidInput("unknown feature kind '" + std::string(name) + "' (expected raw, ae or ee)");
}

Summary summarize(std::span<const UserResult> users) {
  Summary s;
  if (users.empty()) return s;
  const auto n = static_cast<double>(users.size());
  for (const auto& u : users) {
    s.mean_auc += u.auc;
    s.mean_eer += u.eer;
  }
  s.mean_auc /= n;
  s.mean_eer /= n;
  for (const auto& u : users) {
    s.stdev_auc += (u.auc - s.mean_auc) * (u.auc - s.mean_auc);
    s.stdev_eer += (u.eer - s.mean_eer) * (u.eer - s.mean_eer);
  }
  s.stdev_auc = std::sqrt(s.stdev_auc / n);
  s.stdev_eer = std::sqrt(s.stdev_eer / n);
  return s;
}

namespace {

using Group = std::vector<const FeatureVector*>;

struct UserTask {
  std::string user;
  Group enrol;
  Group genuine;
  const std::vector<const Group*>* impostors = nullptr;
};

struct UserOutcome {
  std::optional<UserResult> result;
  std::string warning;
};

Eigen::MatrixXd stack(const Group& group) {
  Eigen::MatrixXd m(static_cast<Index>(group.size()), group.front()->values.size());
  for (std::size_t i = 0; i < group.size(); ++i) m.row(static_cast<Index>(i)) = group[i]->values.transpose();
  return m;
}

std::vector<DecisionScore> score_group(const OcsvmModel& model, const Group& group, const Eigen::RowVectorXd& mean,
                                       const Eigen::RowVectorXd& scale) {
  std::vector<DecisionScore> out;
  out.reserve(group.size());
  for (const auto* fv : group) {
    const Eigen::VectorXd x = ((fv->values.transpose() - mean).array() / scale.array()).matrix().transpose();
    out.push_back({decision_score(model, x), fv->source});
  }
  return out;
}

UserOutcome evaluate_user(const UserTask& task, const ProtocolSpec& spec, const OcsvmParams& params) {
  UserOutcome outcome;
  if (task.enrol.size() < 2 || task.genuine.empty()) {
    outcome.warning = "user " + task.user + " skipped: " + std::to_string(task.enrol.size()) + " enrolment and " +
                      std::to_string(task.genuine.size()) + " genuine frames";
    return outcome;
  }
  Eigen::MatrixXd train = stack(task.enrol);
  Eigen::RowVectorXd mean = Eigen::RowVectorXd::Zero(train.cols());
  Eigen::RowVectorXd scale = Eigen::RowVectorXd::Ones(train.cols());
  if (params.standardize) {
    mean = train.colwise().mean();
    scale = (train.rowwise() - mean).array().square().colwise().mean().sqrt().matrix();
    scale = (scale.array() > 1e-12).select(scale, 1.0);
    train = ((train.rowwise() - mean).array().rowwise() / scale.array()).matrix();
  }
  const OcsvmModel model = train_ocsvm(train, params.solver);

  const auto genuine = aggregate_by_recording(score_group(model, task.genuine, mean, scale), spec.aggregation_window);
  std::vector<double> impostor;
  for (const auto* group : *task.impostors) {
    const auto agg = aggregate_by_recording(score_group(model, *group, mean, scale), spec.aggregation_window);
    impostor.insert(impostor.end(), agg.begin(), agg.end());
  }
  if (genuine.empty() || impostor.empty()) {
    outcome.warning = "user " + task.user + " skipped: no complete aggregation window of " +
                      (genuine.empty() ? std::string("genuine") : std::string("impostor")) + " scores";
    return outcome;
  }
  outcome.result = UserResult{task.user, roc_auc(genuine, impostor), eer(genuine, impostor), genuine.size(),
                              impostor.size()};
  return outcome;
}

std::size_t worker_count() {
  std::size_t n = std::max(1u, std::thread::hardware_concurrency());
  if (const char* env = std::getenv("GAITVERIFY_THREADS")) {
    const long cap = std::strtol(env, nullptr, 10);
    if (cap >= 1) n = std::min(n, static_cast<std::size_t>(cap));
  }
  return n;
}

}  // namespace

EvalReport run_protocol(std::span<const FeatureVector> features, ExtractorKind extractor, const ProtocolSpec& spec,
                        const OcsvmParams& params, AugmentationKind augmentation) {
  if (spec.aggregation_window < 1) throw InvalidInput("run_protocol: aggregation window must be >= 1");
  if (!(spec.train_fraction > 0.0 && spec.train_fraction < 1.0)) {
    throw InvalidInput("run_protocol: train_fraction must be in (0, 1)");
  }
  if (features.empty()) throw InvalidInput("run_protocol: no feature vectors");
  const Index dim = features.front().values.size();

  // (subject, session) -> frames ordered by recording and frame index.
  std::map<std::pair<std::string, std::string>, Group> frames;
  for (const auto& fv : features) {
    if (fv.values.size() != dim) throw InvalidInput("run_protocol: feature vectors differ in dimension");
    frames[{fv.source.subject_id, fv.source.session_id}].push_back(&fv);
  }
  std::vector<std::string> users;
  for (auto& [key, group] : frames) {
    std::sort(group.begin(), group.end(), [](const FeatureVector* a, const FeatureVector* b) {
      return a->source < b->source;
    });
    if (users.empty() || users.back() != key.first) users.push_back(key.first);
  }

  const bool cross = spec.kind == ProtocolKind::cross_day;
  const std::string& test_session = spec.kind == ProtocolKind::same_day_s1 ? spec.session1 : spec.session2;
  const std::string& train_session = cross ? spec.session1 : test_session;
  auto find = [&](const std::string& user, const std::string& session) -> const Group* {
    auto it = frames.find({user, session});
    return it == frames.end() ? nullptr : &it->second;
  };

  bool any_test_session = false;
  for (const auto& user : users) any_test_session |= find(user, test_session) != nullptr;
  if (!any_test_session) {
    throw InvalidInput("run_protocol: no frames for session '" + test_session + "'");
  }
  if (cross) {
    bool any_train = false;
    for (const auto& user : users) any_train |= find(user, train_session) != nullptr;
    if (!any_train) throw InvalidInput("run_protocol: no frames for session '" + train_session + "'");
  }

  // Impostor pools: every test-session group of the other users.
  std::vector<std::vector<const Group*>> impostor_pools(users.size());
  std::vector<UserTask> tasks(users.size());
  for (std::size_t u = 0; u < users.size(); ++u) {
    for (std::size_t v = 0; v < users.size(); ++v) {
      if (v == u) continue;
      if (const auto* g = find(users[v], test_session)) impostor_pools[u].push_back(g);
    }
    auto& task = tasks[u];
    task.user = users[u];
    task.impostors = &impostor_pools[u];
    const Group* test = find(users[u], test_session);
    const Group* enrol = find(users[u], train_session);
    if (!test || !enrol) continue;  // reported as skipped below
    if (cross) {
      task.enrol = *enrol;
      task.genuine = *test;
    } else {
      const auto n = test->size();
      if (n < 3) continue;
      auto n_train = static_cast<std::size_t>(std::floor(spec.train_fraction * static_cast<double>(n)));
      n_train = std::clamp<std::size_t>(n_train, 2, n - 1);
      task.enrol.assign(test->begin(), test->begin() + static_cast<std::ptrdiff_t>(n_train));
      task.genuine.assign(test->begin() + static_cast<std::ptrdiff_t>(n_train), test->end());
    }
  }

  std::vector<UserOutcome> outcomes(users.size());
  const std::size_t workers = std::min(worker_count(), users.size());
  if (workers <= 1) {
    for (std::size_t u = 0; u < users.size(); ++u) outcomes[u] = evaluate_user(tasks[u], spec, params);
  } else {
    std::vector<std::future<void>> jobs;
    for (std::size_t w = 0; w < workers; ++w) {
      jobs.push_back(std::async(std::launch::async, [&, w] {
        for (std::size_t u = w; u < users.size(); u += workers) outcomes[u] = evaluate_user(tasks[u], spec, params);
      }));
    }
    for (auto& j : jobs) j.get();
  }

  EvalReport report{spec, extractor, augmentation, {}, {}, {}};
  for (auto& o : outcomes) {
    if (o.result) {
      report.users.push_back(std::move(*o.result));
    } else {
      report.warnings.push_back(std::move(o.warning));
    }
  }
  report.summary = summarize(report.users);
  return report;
}

void write_report_csv(const EvalReport& report, std::ostream& out) {
  out << "user_id,auc,eer\n";
  for (const auto& u : report.users) out << u.user_id << ',' << format_real(u.auc) << ',' << format_real(u.eer) << '\n';
  out << "mean," << format_real(report.summary.mean_auc) << ',' << format_real(report.summary.mean_eer) << '\n';
  out << "stdev," << format_real(report.summary.stdev_auc) << ',' << format_real(report.summary.stdev_eer) << '\n';
}

std::string format_summary_table(std::span<const EvalReport> reports) {
  std::ostringstream out;
  char line[256];
  std::snprintf(line, sizeof line, "%-9s %-13s %-10s %-7s %-17s %-17s %s\n", "Features", "Augmentation", "Evaluation",
                "Window", "Avg AUC[%]", "Avg EER[%]", "Users");
  out << line;
  for (const auto& r : reports) {
    char auc[64], err[64];
    std::snprintf(auc, sizeof auc, "%.2f (%.2f)", 100.0 * r.summary.mean_auc, 100.0 * r.summary.stdev_auc);
    std::snprintf(err, sizeof err, "%.2f (%.2f)", 100.0 * r.summary.mean_eer, 100.0 * r.summary.stdev_eer);
    std::string features(to_string(r.features));
    for (auto& ch : features) ch = static_cast<char>(std::toupper(static_cast<unsigned char>(ch)));
    std::snprintf(line, sizeof line, "%-9s %-13s %-10s %-7d %-17s %-17s %zu\n", features.c_str(),
                  std::string(to_string(r.augmentation)).c_str(), std::string(protocol_label(r.protocol.kind)).c_str(),
                  r.protocol.aggregation_window, auc, err, r.users.size());
    out << line;
  }
  return out.str();
}

std::string report_digest(const EvalReport& report) {
  std::ostringstream csv;
  write_report_csv(report, csv);
  return sha256_hex(csv.str());
}

}  // namespace gaitverify
