#pragma once

#include "gaitverify/core.hpp"
#include "gaitverify/data.hpp"

#include <Eigen/Dense>

#include <optional>

namespace gaitverify {

struct OcsvmOptions {
  double nu = 0.1;
  /// RBF width; unset means 1 / (d * mean per-coordinate variance of the training set).
  std::optional<double> gamma;
  /// Stop once the maximal KKT violation drops below this value.
  double tolerance = 1e-4;
  /// 0 selects max(10'000'000, 100 * n).
  long max_iterations = 0;
};

struct OcsvmSolverStats {
  long iterations = 0;
  double kkt_violation = 0.0;
  double objective = 0.0;  // 0.5 * alpha' Q alpha at the solution
};

/// nu-one-class SVM with an RBF kernel, dual normalized so that sum(alphas) == 1 and
/// 0 <= alpha_i <= 1 / (nu * n). Only support vectors (alpha > 0) are kept.
struct OcsvmModel {
  Eigen::MatrixXd support_vectors;  // one row per support vector
  Eigen::VectorXd alphas;
  double rho = 0.0;
  double gamma = 1.0;
  double nu = 0.1;
  OcsvmSolverStats stats;
};

/// exp(-gamma * |a - b|^2)
double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b, double gamma);

/// 1 / (d * Var), Var being the mean over coordinates of the population variance.
/// Falls back to 1 / d when every coordinate is constant.
double auto_gamma(const Eigen::Ref<const Eigen::MatrixXd>& samples);

/// Trains on the rows of `samples`. Rows are put in lexicographic order before solving so the
/// result does not depend on the order they were given in.
OcsvmModel train_ocsvm(const Eigen::Ref<const Eigen::MatrixXd>& samples, const OcsvmOptions& options = {});

/// sum_i alpha_i K(sv_i, x) - rho; positive means "looks like the enrolled user".
double decision_score(const OcsvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x);

/// Scores every row of `samples`.
Eigen::VectorXd decision_scores(const OcsvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& samples);

inline constexpr const char* kOcsvmArchitecture = "ocsvm-rbf/v1";

/// Support vectors and alphas as single-precision entries; rho, gamma and nu as exact
/// decimal metadata.
ModelContainer ocsvm_to_container(const OcsvmModel& model);
OcsvmModel ocsvm_from_container(const ModelContainer& container);

}  // namespace gaitverify
