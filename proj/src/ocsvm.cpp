#include "gaitverify/ocsvm.hpp"

#include <algorithm>
#include <cstdint>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>
#include <vector>

namespace gaitverify {

namespace {

constexpr double kTau = 1e-12;

Eigen::MatrixXd kernel_matrix(const Eigen::MatrixXd& x, double gamma) {
  const Eigen::VectorXd norms = x.rowwise().squaredNorm();
  Eigen::MatrixXd k = -2.0 * (x * x.transpose());
  k.colwise() += norms;
  k.rowwise() += norms.transpose();
  return (-gamma * k.cwiseMax(0.0)).array().exp().matrix();
}

std::vector<Index> lexicographic_order(const Eigen::Ref<const Eigen::MatrixXd>& x) {
  std::vector<Index> order(static_cast<std::size_t>(x.rows()));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
    for (Index j = 0; j < x.cols(); ++j) {
      if (x(a, j) != x(b, j)) return x(a, j) < x(b, j);
    }
    return false;
  });
  return order;
}

}  // namespace

double rbf_kernel(const Eigen::Ref<const Eigen::VectorXd>& a, const Eigen::Ref<const Eigen::VectorXd>& b, double gamma) {
  return std::exp(-gamma * (a - b).squaredNorm());
}

double auto_gamma(const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  const auto d = static_cast<double>(samples.cols());
  const Eigen::RowVectorXd mean = samples.colwise().mean();
  const double var = (samples.rowwise() - mean).array().square().colwise().mean().mean();
  return var > 0.0 ? 1.0 / (d * var) : 1.0 / d;
}

OcsvmModel train_ocsvm(const Eigen::Ref<const Eigen::MatrixXd>& samples, const OcsvmOptions& options) {
  const Index n = samples.rows();
  if (n < 2) throw InvalidInput("train_ocsvm: need at least 2 training vectors");
  if (!(options.nu > 0.0 && options.nu <= 1.0)) throw InvalidInput("train_ocsvm: nu must be in (0, 1]");
  if (options.gamma && !(*options.gamma > 0.0)) throw InvalidInput("train_ocsvm: gamma must be positive");
  if (!samples.allFinite()) throw InvalidInput("train_ocsvm: non-finite training vector");

  const auto order = lexicographic_order(samples);
  Eigen::MatrixXd x(n, samples.cols());
  for (Index i = 0; i < n; ++i) x.row(i) = samples.row(order[static_cast<std::size_t>(i)]);

  const double gamma = options.gamma.value_or(auto_gamma(x));
  const Eigen::MatrixXd q = kernel_matrix(x, gamma);
  const double upper = 1.0 / (options.nu * static_cast<double>(n));
  const long max_iter = options.max_iterations > 0 ? options.max_iterations : std::max<long>(10'000'000, 100 * n);

  // Uniform start is feasible for every nu in (0, 1] and treats duplicate points alike.
  Eigen::VectorXd alpha = Eigen::VectorXd::Constant(n, 1.0 / static_cast<double>(n));
  Eigen::VectorXd grad = q * alpha;

  auto below_upper = [&](Index t) { return alpha[t] < upper; };
  auto above_zero = [&](Index t) { return alpha[t] > 0.0; };

  long iter = 0;
  double violation = 0.0;
  while (true) {
    // i: steepest feasible ascent direction (smallest gradient among alphas that may grow).
    Index i = -1;
    double g_min = std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      if (below_upper(t) && grad[t] < g_min) {
        g_min = grad[t];
        i = t;
      }
    }
    double g_max = -std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      if (above_zero(t)) g_max = std::max(g_max, grad[t]);
    }
    violation = i < 0 ? 0.0 : g_max - g_min;
    if (violation < options.tolerance) break;
    if (iter >= max_iter) {
      throw ConvergenceError("train_ocsvm: no convergence after " + std::to_string(iter) + " iterations", violation);
    }

    // j: second-order choice among alphas that may shrink and violate against i.
    Index j = -1;
    double best_gain = -std::numeric_limits<double>::infinity();
    for (Index t = 0; t < n; ++t) {
      if (!above_zero(t) || t == i) continue;
      const double b = grad[t] - g_min;
      if (b <= 0.0) continue;
      const double a = std::max(q(i, i) + q(t, t) - 2.0 * q(i, t), kTau);
      const double gain = b * b / a;
      if (gain > best_gain) {
        best_gain = gain;
        j = t;
      }
    }
    if (j < 0) break;

    const double curvature = std::max(q(i, i) + q(j, j) - 2.0 * q(i, j), kTau);
    double delta = (grad[j] - grad[i]) / curvature;
    const double room_i = upper - alpha[i];
    const double room_j = alpha[j];
    delta = std::min({delta, room_i, room_j});
    alpha[i] = delta == room_i ? upper : alpha[i] + delta;
    alpha[j] = delta == room_j ? 0.0 : alpha[j] - delta;
    grad += delta * (q.col(i) - q.col(j));
    ++iter;
  }

  // rho: mean gradient over free alphas, else the midpoint of the feasible interval.
  double free_sum = 0.0;
  Index free_count = 0;
  double lower_bound = -std::numeric_limits<double>::infinity();
  double upper_bound = std::numeric_limits<double>::infinity();
  for (Index t = 0; t < n; ++t) {
    if (alpha[t] >= upper) {
      lower_bound = std::max(lower_bound, grad[t]);
    } else if (alpha[t] <= 0.0) {
      upper_bound = std::min(upper_bound, grad[t]);
    } else {
      free_sum += grad[t];
      ++free_count;
    }
  }

  OcsvmModel model;
  model.rho = free_count > 0 ? free_sum / static_cast<double>(free_count) : 0.5 * (lower_bound + upper_bound);
  model.gamma = gamma;
  model.nu = options.nu;
  model.stats = {iter, violation, 0.5 * alpha.dot(grad)};

  std::vector<Index> support;
  for (Index t = 0; t < n; ++t) {
    if (alpha[t] > 0.0) support.push_back(t);
  }
  model.support_vectors.resize(static_cast<Index>(support.size()), x.cols());
  model.alphas.resize(static_cast<Index>(support.size()));
  for (std::size_t s = 0; s < support.size(); ++s) {
    model.support_vectors.row(static_cast<Index>(s)) = x.row(support[s]);
    model.alphas[static_cast<Index>(s)] = alpha[support[s]];
  }
  return model;
}

double decision_score(const OcsvmModel& model, const Eigen::Ref<const Eigen::VectorXd>& x) {
  if (x.size() != model.support_vectors.cols()) {
    throw InvalidInput("decision_score: vector has dimension " + std::to_string(x.size()) + ", model expects " +
                       std::to_string(model.support_vectors.cols()));
  }
  double sum = 0.0;
  for (Index s = 0; s < model.support_vectors.rows(); ++s) {
    sum += model.alphas[s] * std::exp(-model.gamma * (model.support_vectors.row(s).transpose() - x).squaredNorm());
  }
  return sum - model.rho;
}

Eigen::VectorXd decision_scores(const OcsvmModel& model, const Eigen::Ref<const Eigen::MatrixXd>& samples) {
  Eigen::VectorXd out(samples.rows());
  for (Index r = 0; r < samples.rows(); ++r) out[r] = decision_score(model, samples.row(r).transpose());
  return out;
}

ModelContainer ocsvm_to_container(const OcsvmModel& model) {
  ModelContainer c;
  c.metadata["architecture"] = kOcsvmArchitecture;
  c.metadata["rho"] = format_real(model.rho);
  c.metadata["gamma"] = format_real(model.gamma);
  c.metadata["nu"] = format_real(model.nu);
  const auto m = static_cast<std::uint64_t>(model.support_vectors.rows());
  const auto d = static_cast<std::uint64_t>(model.support_vectors.cols());
  ContainerEntry sv{"support_vectors", {m, d}, {}};
  for (Index r = 0; r < model.support_vectors.rows(); ++r) {
    for (Index col = 0; col < model.support_vectors.cols(); ++col) {
      sv.values.push_back(static_cast<float>(model.support_vectors(r, col)));
    }
  }
  ContainerEntry alphas{"alphas", {m}, {}};
  for (Index r = 0; r < model.alphas.size(); ++r) alphas.values.push_back(static_cast<float>(model.alphas[r]));
  c.entries.push_back(std::move(sv));
  c.entries.push_back(std::move(alphas));
  return c;
}

OcsvmModel ocsvm_from_container(const ModelContainer& container) {
  auto meta = [&](const std::string& key) {
    const auto it = container.metadata.find(key);
    if (it == container.metadata.end()) throw FormatError("ocsvm container lacks metadata '" + key + "'");
    return it->second;
  };
  if (meta("architecture") != kOcsvmArchitecture) throw FormatError("container does not hold a one-class SVM");
  const auto* sv = container.find("support_vectors");
  const auto* alphas = container.find("alphas");
  if (!sv || !alphas || sv->shape.size() != 2 || alphas->shape.size() != 1 || sv->shape[0] != alphas->shape[0]) {
    throw FormatError("ocsvm container has inconsistent support vector tables");
  }
  OcsvmModel model;
  const auto m = static_cast<Index>(sv->shape[0]), d = static_cast<Index>(sv->shape[1]);
  model.support_vectors =
      Eigen::Map<const Eigen::Matrix<float, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>>(sv->values.data(), m, d)
          .cast<double>();
  model.alphas = Eigen::Map<const Eigen::VectorXf>(alphas->values.data(), m).cast<double>();
  model.rho = parse_real(meta("rho"));
  model.gamma = parse_real(meta("gamma"));
  model.nu = parse_real(meta("nu"));
  return model;
}

}  // namespace gaitverify
