#pragma once

#include <span>
#include <vector>

#include <Eigen/Dense>

#include "multipfa/multinomial.hpp"

namespace multipfa {

/// Stacked slope influence for one baseline-category pair.
struct StackedInfluence {
  Eigen::MatrixXd psi;                   // n × p′
  std::vector<Eigen::Index> active_index;  // column → original feature index
};

/// Joint inference for the slopes β_1c, ..., β_pc of one category c.
/// Vectors and matrices cover the p′ successfully fitted features only;
/// active_index maps them back to original feature positions.
struct CategoryInference {
  int category = 0;  // 1..q−1, in fit coding (baseline = q)
  Eigen::Index n = 0;
  Eigen::Index p = 0;
  std::vector<bool> active_mask;           // length p
  std::vector<Eigen::Index> active_index;  // length p′
  Eigen::VectorXd beta_hat;
  Eigen::MatrixXd sigma_hat;
  Eigen::MatrixXd corr_hat;
  Eigen::VectorXd z;
  Eigen::VectorXd p_raw;

  Eigen::Index active_count() const { return static_cast<Eigen::Index>(active_index.size()); }
  /// Standard error sqrt(sigma_hat_jj / n) of active feature j.
  double se(Eigen::Index j) const;
};

/// Columns of category c's influence for every successful fit, in feature
/// order. Throws std::invalid_argument if successful fits disagree on n.
StackedInfluence stack_influence(std::span<const MarginalFit> fits, int category);

/// (1/n)·psiᵀ·psi.
Eigen::MatrixXd covariance_estimate(const Eigen::MatrixXd& psi);

struct ZResult {
  Eigen::VectorXd z;  // NaN where the variance was not positive
  std::vector<Eigen::Index> invalid;
};

/// Z_j = β̂_j · sqrt(n) / sqrt(sigma_hat_jj).
ZResult z_statistics(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& sigma_hat, Eigen::Index n);

/// D^{−1/2} Σ D^{−1/2} with exact unit diagonal and entries clamped to [−1, 1].
/// Throws std::invalid_argument on a non-positive diagonal entry.
Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& sigma_hat);

/// 2Φ(−|z_j|), floored at 1e-300.
Eigen::VectorXd raw_pvalues(const Eigen::VectorXd& z);

/// Full per-category inference. Features whose fit failed, or whose
/// estimated variance is not positive, are masked out.
CategoryInference infer_category(std::span<const MarginalFit> fits, int category);

/// infer_category for c = 1..q−1 in one pass over the fits.
std::vector<CategoryInference> infer_all(std::span<const MarginalFit> fits, int q);

}  // namespace multipfa
