#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace multipfa {

/// Baseline-category logit parameters for one feature. Entry c - 1 belongs to
/// category c; the baseline (code q) has implicit zero parameters.
struct MarginalParams {
  Eigen::VectorXd alpha;
  Eigen::VectorXd beta;

  int categories() const { return static_cast<int>(alpha.size()) + 1; }

  /// Interleaved (α_1, β_1, ..., α_{q−1}, β_{q−1}).
  Eigen::VectorXd packed() const;
  static MarginalParams unpack(const Eigen::VectorXd& theta);
  static MarginalParams zeros(int q);
};

struct FitOptions {
  int max_iter = 100;
  double grad_tol = 1e-8;
  double rel_loglik_tol = 1e-12;
  int max_halvings = 30;
  /// Slopes beyond this bound (per standard deviation of the feature) are
  /// treated as separation.
  double separation_bound = 30.0;
};

enum class FitStatus { ok, max_iterations, separation_detected, singular_information, stalled };

std::string_view to_string(FitStatus status);

struct MarginalFit {
  MarginalParams params;
  FitStatus status = FitStatus::singular_information;
  std::string reason;
  bool converged = false;
  int iterations = 0;
  /// Sup-norm of the log-likelihood gradient at params.
  double grad_norm = 0.0;
  double log_likelihood = 0.0;
  /// Log-likelihood after every accepted Newton step (first entry: start).
  std::vector<double> loglik_trace;
  /// Average Fisher information, 2(q−1) square, interleaved like packed().
  Eigen::MatrixXd fisher;
  /// n × (q−1); row i holds the slope coordinates of fisher⁻¹ · score_i.
  /// Empty for failed fits.
  Eigen::MatrixXd influence;

  bool ok() const { return status == FitStatus::ok; }
};

/// (π_1, ..., π_{q−1}, π_q) for a single feature value.
Eigen::VectorXd category_probs(const MarginalParams& params, double x);

/// Σ_i log π_{y_i}(x_i). Throws std::invalid_argument on length mismatch or
/// a response code outside 1..q.
double log_likelihood(const MarginalParams& params, std::span<const double> xs, std::span<const int> ys);

struct ScoreFisher {
  Eigen::VectorXd gradient;  // full-sample gradient of log_likelihood
  Eigen::MatrixXd fisher;    // Fisher information averaged over units
};

ScoreFisher score_and_fisher(const MarginalParams& params, std::span<const double> xs, std::span<const int> ys);

/// Maximum-likelihood fit by Newton–Raphson with step halving. Never throws
/// on numerical trouble; the outcome is reported through status.
MarginalFit fit_marginal(std::span<const double> xs, std::span<const int> ys, int q, const FitOptions& opts = {});

/// Fits every column of `features`; result j belongs to column j.
std::vector<MarginalFit> fit_all(const Eigen::MatrixXd& features, std::span<const int> ys, int q,
                                 const FitOptions& opts = {}, unsigned threads = 1);

/// One JSON-lines diagnostics record.
nlohmann::json diagnostics_json(const MarginalFit& fit, Eigen::Index feature, std::string_view name);

}  // namespace multipfa
