#include "multipfa/mmm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multipfa/normal.hpp"

namespace multipfa {

double CategoryInference::se(Eigen::Index j) const {
  return std::sqrt(sigma_hat(j, j) / static_cast<double>(n));
}

StackedInfluence stack_influence(std::span<const MarginalFit> fits, int category) {
  StackedInfluence out;
  Eigen::Index n = -1;
  for (std::size_t j = 0; j < fits.size(); ++j) {
    const auto& f = fits[j];
    if (!f.ok()) continue;
    if (category < 1 || category > f.influence.cols())
      throw std::invalid_argument("category " + std::to_string(category) + " out of range");
    if (n < 0) n = f.influence.rows();
    if (f.influence.rows() != n)
      throw std::invalid_argument("fit " + std::to_string(j) + " has n = " + std::to_string(f.influence.rows()) +
                                  ", expected " + std::to_string(n));
    out.active_index.push_back(static_cast<Eigen::Index>(j));
  }
  out.psi.resize(std::max<Eigen::Index>(n, 0), static_cast<Eigen::Index>(out.active_index.size()));
  for (std::size_t k = 0; k < out.active_index.size(); ++k)
    out.psi.col(static_cast<Eigen::Index>(k)) =
        fits[static_cast<std::size_t>(out.active_index[k])].influence.col(category - 1);
  return out;
}

Eigen::MatrixXd covariance_estimate(const Eigen::MatrixXd& psi) {
  const auto p = psi.cols();
  Eigen::MatrixXd sigma = Eigen::MatrixXd::Zero(p, p);
  if (psi.rows() == 0) return sigma;
  sigma.selfadjointView<Eigen::Lower>().rankUpdate(psi.transpose(), 1.0 / static_cast<double>(psi.rows()));
  sigma.triangularView<Eigen::StrictlyUpper>() = sigma.transpose();
  return sigma;
}

ZResult z_statistics(const Eigen::VectorXd& beta_hat, const Eigen::MatrixXd& sigma_hat, Eigen::Index n) {
  ZResult out;
  out.z.resize(beta_hat.size());
  const double root_n = std::sqrt(static_cast<double>(n));
  for (Eigen::Index j = 0; j < beta_hat.size(); ++j) {
    const double v = sigma_hat(j, j);
    if (v > 0.0 && std::isfinite(v)) {
      out.z[j] = beta_hat[j] * root_n / std::sqrt(v);
    } else {
      out.z[j] = std::numeric_limits<double>::quiet_NaN();
      out.invalid.push_back(j);
    }
  }
  return out;
}

Eigen::MatrixXd correlation_matrix(const Eigen::MatrixXd& sigma_hat) {
  const auto p = sigma_hat.rows();
  Eigen::VectorXd inv_sd(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double v = sigma_hat(j, j);
    if (!(v > 0.0)) throw std::invalid_argument("non-positive variance at index " + std::to_string(j));
    inv_sd[j] = 1.0 / std::sqrt(v);
  }
  Eigen::MatrixXd corr = inv_sd.asDiagonal() * sigma_hat * inv_sd.asDiagonal();
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index i = j + 1; i < p; ++i) {
      const double r = std::clamp(0.5 * (corr(i, j) + corr(j, i)), -1.0, 1.0);
      corr(i, j) = r;
      corr(j, i) = r;
    }
    corr(j, j) = 1.0;
  }
  return corr;
}

Eigen::VectorXd raw_pvalues(const Eigen::VectorXd& z) {
  Eigen::VectorXd p(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) p[j] = two_sided_pvalue(z[j]);
  return p;
}

CategoryInference infer_category(std::span<const MarginalFit> fits, int category) {
  CategoryInference ci;
  ci.category = category;
  ci.p = static_cast<Eigen::Index>(fits.size());
  auto stacked = stack_influence(fits, category);
  ci.n = stacked.psi.rows();

  Eigen::VectorXd beta(static_cast<Eigen::Index>(stacked.active_index.size()));
  for (std::size_t k = 0; k < stacked.active_index.size(); ++k)
    beta[static_cast<Eigen::Index>(k)] =
        fits[static_cast<std::size_t>(stacked.active_index[k])].params.beta[category - 1];
  Eigen::MatrixXd sigma = covariance_estimate(stacked.psi);
  ZResult zr = z_statistics(beta, sigma, ci.n);

  if (!zr.invalid.empty()) {
    std::vector<Eigen::Index> keep;
    std::vector<Eigen::Index> kept_features;
    for (Eigen::Index k = 0; k < beta.size(); ++k) {
      if (std::find(zr.invalid.begin(), zr.invalid.end(), k) != zr.invalid.end()) continue;
      keep.push_back(k);
      kept_features.push_back(stacked.active_index[static_cast<std::size_t>(k)]);
    }
    beta = beta(keep).eval();
    sigma = sigma(keep, keep).eval();
    zr.z = zr.z(keep).eval();
    stacked.active_index = std::move(kept_features);
  }

  ci.active_index = std::move(stacked.active_index);
  ci.active_mask.assign(fits.size(), false);
  for (auto j : ci.active_index) ci.active_mask[static_cast<std::size_t>(j)] = true;
  ci.beta_hat = std::move(beta);
  ci.corr_hat = correlation_matrix(sigma);
  ci.sigma_hat = std::move(sigma);
  ci.z = std::move(zr.z);
  ci.p_raw = raw_pvalues(ci.z);
  return ci;
}

std::vector<CategoryInference> infer_all(std::span<const MarginalFit> fits, int q) {
  std::vector<CategoryInference> out;
  out.reserve(static_cast<std::size_t>(std::max(q - 1, 0)));
  for (int c = 1; c < q; ++c) out.push_back(infer_category(fits, c));
  return out;
}

}  // namespace multipfa
