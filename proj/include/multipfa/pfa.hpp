#pragma once

#include <optional>
#include <span>
#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace multipfa {

struct Spectrum {
  Eigen::VectorXd eigenvalues;   // non-increasing, clamped at 0
  Eigen::MatrixXd eigenvectors;  // column h pairs with eigenvalues[h]
  int clamped_count = 0;         // negative eigenvalues set to zero
  double clamped_magnitude = 0.0;  // largest |λ| among them
};

/// Full symmetric eigendecomposition. Throws std::invalid_argument if the
/// input deviates from symmetry by more than 1e-8.
Spectrum spectral_decompose(const Eigen::MatrixXd& corr);

struct ExplicitK {
  int k = 0;
};
struct ThresholdK {
  double tau = 0.01;
};
using KPolicy = std::variant<ExplicitK, ThresholdK>;

/// ExplicitK is returned verbatim (bounds-checked against [0, p′]);
/// ThresholdK picks the smallest k with λ_{k+1} / Σλ < τ.
int choose_k(const Eigen::VectorXd& eigenvalues, const KPolicy& policy);

struct Loadings {
  Eigen::MatrixXd b;  // p′ × k, column h = sqrt(λ_h)·γ_h
  Eigen::VectorXd a;  // a_j = (max(1 − ‖b_j‖², ε))^{−1/2}
  int clamp_count = 0;
};

inline constexpr double kLoadingFloor = 1e-6;

Loadings factor_loadings(const Spectrum& spectrum, int k);

enum class FactorRegression { l1, l2 };
std::string_view to_string(FactorRegression reg);

struct FactorEstimate {
  Eigen::VectorXd w;
  bool degenerate = false;  // rank-deficient design (minimum-norm solution)
  bool converged = true;    // L1 only
  int iterations = 0;       // L1 only
  Eigen::Index used = 0;    // observations entering the regression
  std::vector<double> objective_trace;  // L1 only: smoothed objective per iteration
};

/// Least squares on the floor(trim·p′) features with the smallest |z|
/// (ties broken by index).
FactorEstimate estimate_factors_l2(const Eigen::VectorXd& z, const Eigen::MatrixXd& b, double trim = 0.95);

struct L1Options {
  double smoothing = 1e-8;
  int max_iter = 200;
  double tol = 1e-8;
};

/// Least absolute deviations over all features, by iteratively reweighted
/// least squares started from the full least-squares fit.
FactorEstimate estimate_factors_l1(const Eigen::VectorXd& z, const Eigen::MatrixXd& b, const L1Options& opts = {});

struct FdpPoint {
  double v_hat = 0.0;  // Σ_j Φ(a_j(z_{t/2} + η_j)) + Φ(a_j(z_{t/2} − η_j))
  double fdp_hat = 0.0;
};

/// Throws std::invalid_argument if t is outside [0, 1].
FdpPoint fdp_estimate(const Eigen::VectorXd& a, const Eigen::VectorXd& eta, double t, Eigen::Index r_t);

/// 2Φ(−|a_j(z_j − η_j)|), floored at 1e-300.
Eigen::VectorXd adjusted_pvalues(const Eigen::VectorXd& z, const Eigen::VectorXd& a, const Eigen::VectorXd& eta);

struct Counts {
  Eigen::Index r = 0;
  std::optional<Eigen::Index> v;  // rejected true nulls
  std::optional<Eigen::Index> s;  // rejected false nulls
};

/// `is_null[j]` marks true null hypotheses when the truth is known.
Counts empirical_counts(const Eigen::VectorXd& pvalues, double t, const std::vector<bool>& is_null = {});

enum class CountMode { adjusted, raw };
std::string_view to_string(CountMode mode);

struct FdpReport {
  std::vector<double> grid;
  std::vector<Eigen::Index> r;
  std::vector<double> v_sum;  // estimator sum before the min with R(t)
  std::vector<double> v_hat;  // min(v_sum, R(t))
  std::vector<double> fdp_hat;
  std::optional<double> t_alpha;
  std::optional<std::size_t> t_alpha_index;
  double alpha = 0.05;
  CountMode pvalue_kind = CountMode::adjusted;
};

/// `points` thresholds log-spaced from lo to hi inclusive.
std::vector<double> log_grid(double lo, double hi, int points);

/// Evaluates the estimator over the grid (ascending, entries in (0, 1)) and
/// selects the largest t with FDP̂(t) ≤ alpha.
FdpReport threshold_search(const Eigen::VectorXd& a, const Eigen::VectorXd& eta, const Eigen::VectorXd& pvalues,
                           double alpha, const std::vector<double>& grid, CountMode kind = CountMode::adjusted);

/// The fitted principal factor model of one Z-vector.
struct FactorModel {
  Spectrum spectrum;
  int k = 0;
  Loadings loadings;
  FactorEstimate factors;
  FactorRegression regression = FactorRegression::l2;
  Eigen::VectorXd eta_hat;
};

struct PfaOptions {
  KPolicy k = ThresholdK{};
  FactorRegression regression = FactorRegression::l1;
  double trim = 0.95;
  L1Options l1;
  CountMode count = CountMode::adjusted;
  double alpha = 0.05;
  std::vector<double> grid = log_grid(1e-8, 0.05, 200);
};

struct PfaResult {
  FactorModel model;
  Eigen::VectorXd p_adjusted;
  FdpReport report;
};

/// Complete principal factor approximation for one category: spectrum, k,
/// loadings, factor estimate, adjusted p-values and the FDP curve.
PfaResult run_pfa(const Eigen::VectorXd& z, const Eigen::MatrixXd& corr, const Eigen::VectorXd& p_raw,
                  const PfaOptions& opts);

}  // namespace multipfa
