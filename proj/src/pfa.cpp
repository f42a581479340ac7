#include "multipfa/pfa.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include "multipfa/normal.hpp"

namespace multipfa {

namespace {

Eigen::VectorXd least_squares(const Eigen::MatrixXd& design, const Eigen::VectorXd& y, bool* degenerate) {
  Eigen::CompleteOrthogonalDecomposition<Eigen::MatrixXd> cod(design);
  if (degenerate) *degenerate = cod.rank() < design.cols();
  return cod.solve(y);
}

double l1_objective(const Eigen::VectorXd& z, const Eigen::MatrixXd& b, const Eigen::VectorXd& w) {
  return (z - b * w).cwiseAbs().sum();
}

}  // namespace

Spectrum spectral_decompose(const Eigen::MatrixXd& corr) {
  if (corr.rows() != corr.cols()) throw std::invalid_argument("correlation matrix is not square");
  const auto p = corr.rows();
  Spectrum s;
  if (p == 0) return s;
  const double asym = (corr - corr.transpose()).cwiseAbs().maxCoeff();
  if (!(asym <= 1e-8)) throw std::invalid_argument("matrix is not symmetric (max deviation " + std::to_string(asym) + ")");

  const Eigen::MatrixXd sym = 0.5 * (corr + corr.transpose());
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(sym);
  if (solver.info() != Eigen::Success) throw std::runtime_error("eigendecomposition failed");

  // Eigen returns ascending order.
  s.eigenvalues = solver.eigenvalues().reverse();
  s.eigenvectors = solver.eigenvectors().rowwise().reverse();
  for (Eigen::Index h = 0; h < p; ++h) {
    if (s.eigenvalues[h] < 0.0) {
      ++s.clamped_count;
      s.clamped_magnitude = std::max(s.clamped_magnitude, -s.eigenvalues[h]);
      s.eigenvalues[h] = 0.0;
    }
  }
  return s;
}

int choose_k(const Eigen::VectorXd& eigenvalues, const KPolicy& policy) {
  const auto p = static_cast<int>(eigenvalues.size());
  if (const auto* ex = std::get_if<ExplicitK>(&policy)) {
    if (ex->k < 0 || ex->k > p)
      throw std::invalid_argument("k = " + std::to_string(ex->k) + " outside [0, " + std::to_string(p) + "]");
    return ex->k;
  }
  const double tau = std::get<ThresholdK>(policy).tau;
  const double total = eigenvalues.sum();
  if (!(total > 0.0)) return 0;
  for (int k = 0; k < p; ++k)
    if (eigenvalues[k] / total < tau) return k;
  return p;
}

Loadings factor_loadings(const Spectrum& spectrum, int k) {
  const auto p = spectrum.eigenvalues.size();
  if (k < 0 || k > p) throw std::invalid_argument("k outside [0, p']");
  Loadings out;
  out.b.resize(p, k);
  for (int h = 0; h < k; ++h) out.b.col(h) = std::sqrt(spectrum.eigenvalues[h]) * spectrum.eigenvectors.col(h);
  out.a.resize(p);
  for (Eigen::Index j = 0; j < p; ++j) {
    const double resid = 1.0 - (k > 0 ? out.b.row(j).squaredNorm() : 0.0);
    if (resid < kLoadingFloor) ++out.clamp_count;
    out.a[j] = 1.0 / std::sqrt(std::max(resid, kLoadingFloor));
  }
  return out;
}

std::string_view to_string(FactorRegression reg) { return reg == FactorRegression::l1 ? "l1" : "l2"; }

std::string_view to_string(CountMode mode) { return mode == CountMode::adjusted ? "adjusted" : "raw"; }

FactorEstimate estimate_factors_l2(const Eigen::VectorXd& z, const Eigen::MatrixXd& b, double trim) {
  const auto p = z.size();
  if (b.rows() != p) throw std::invalid_argument("loadings and z differ in length");
  if (!(trim > 0.0 && trim <= 1.0)) throw std::invalid_argument("trim fraction must be in (0, 1]");
  std::vector<Eigen::Index> order(static_cast<std::size_t>(p));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Eigen::Index i, Eigen::Index j) { return std::abs(z[i]) < std::abs(z[j]); });

  FactorEstimate est;
  est.used = static_cast<Eigen::Index>(std::floor(trim * static_cast<double>(p) + 1e-9));
  order.resize(static_cast<std::size_t>(est.used));
  const Eigen::MatrixXd design = b(order, Eigen::all);
  const Eigen::VectorXd y = z(order);
  est.w = least_squares(design, y, &est.degenerate);
  return est;
}

FactorEstimate estimate_factors_l1(const Eigen::VectorXd& z, const Eigen::MatrixXd& b, const L1Options& opts) {
  const auto p = z.size();
  if (b.rows() != p) throw std::invalid_argument("loadings and z differ in length");
  FactorEstimate est;
  est.used = p;
  est.converged = false;
  Eigen::VectorXd w = least_squares(b, z, &est.degenerate);
  Eigen::VectorXd best = w;
  double best_obj = l1_objective(z, b, w);

  const double eps2 = opts.smoothing * opts.smoothing;
  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    const Eigen::ArrayXd resid = (z - b * w).array();
    const Eigen::ArrayXd smooth = (resid.square() + eps2).sqrt();
    est.objective_trace.push_back(smooth.sum());
    // Weighted least squares with weights 1/smooth, via sqrt-weighted rows.
    const Eigen::VectorXd root_w = smooth.rsqrt().matrix();
    const Eigen::MatrixXd design = root_w.asDiagonal() * b;
    const Eigen::VectorXd y = root_w.asDiagonal() * z;
    const Eigen::VectorXd next = least_squares(design, y, nullptr);
    est.iterations = iter;
    const double change = (next - w).cwiseAbs().maxCoeff();
    w = next;
    const double obj = l1_objective(z, b, w);
    if (obj < best_obj) {
      best_obj = obj;
      best = w;
    }
    if (change <= opts.tol) {
      est.converged = true;
      break;
    }
  }
  est.w = best;
  return est;
}

FdpPoint fdp_estimate(const Eigen::VectorXd& a, const Eigen::VectorXd& eta, double t, Eigen::Index r_t) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold t must lie in [0, 1]");
  if (a.size() != eta.size()) throw std::invalid_argument("a and eta differ in length");
  const double zt = normal_quantile(t / 2.0);
  FdpPoint out;
  for (Eigen::Index j = 0; j < a.size(); ++j)
    out.v_hat += normal_cdf(a[j] * (zt + eta[j])) + normal_cdf(a[j] * (zt - eta[j]));
  out.fdp_hat = r_t > 0 ? std::min(out.v_hat, static_cast<double>(r_t)) / static_cast<double>(r_t) : 0.0;
  return out;
}

Eigen::VectorXd adjusted_pvalues(const Eigen::VectorXd& z, const Eigen::VectorXd& a, const Eigen::VectorXd& eta) {
  Eigen::VectorXd p(z.size());
  for (Eigen::Index j = 0; j < z.size(); ++j) p[j] = two_sided_pvalue(a[j] * (z[j] - eta[j]));
  return p;
}

Counts empirical_counts(const Eigen::VectorXd& pvalues, double t, const std::vector<bool>& is_null) {
  if (!(t >= 0.0 && t <= 1.0)) throw std::invalid_argument("threshold t must lie in [0, 1]");
  if (!is_null.empty() && static_cast<Eigen::Index>(is_null.size()) != pvalues.size())
    throw std::invalid_argument("truth vector length differs from p-values");
  Counts c;
  Eigen::Index v = 0, s = 0;
  for (Eigen::Index j = 0; j < pvalues.size(); ++j) {
    if (!(pvalues[j] <= t)) continue;
    ++c.r;
    if (!is_null.empty()) (is_null[static_cast<std::size_t>(j)] ? v : s) += 1;
  }
  if (!is_null.empty()) {
    c.v = v;
    c.s = s;
  }
  return c;
}

std::vector<double> log_grid(double lo, double hi, int points) {
  if (!(lo > 0.0 && hi >= lo) || points < 1) throw std::invalid_argument("invalid grid bounds");
  std::vector<double> g(static_cast<std::size_t>(points));
  if (points == 1) {
    g[0] = lo;
    return g;
  }
  const double a = std::log10(lo), b = std::log10(hi);
  for (int i = 0; i < points; ++i) g[static_cast<std::size_t>(i)] = std::pow(10.0, a + (b - a) * i / (points - 1));
  g.front() = lo;
  g.back() = hi;
  return g;
}

FdpReport threshold_search(const Eigen::VectorXd& a, const Eigen::VectorXd& eta, const Eigen::VectorXd& pvalues,
                           double alpha, const std::vector<double>& grid, CountMode kind) {
  if (grid.empty()) throw std::invalid_argument("threshold grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] < 1.0)) throw std::invalid_argument("grid entries must lie in (0, 1)");
    if (i > 0 && grid[i] < grid[i - 1]) throw std::invalid_argument("grid must be sorted ascending");
  }
  if (!(alpha > 0.0 && alpha < 1.0)) throw std::invalid_argument("alpha must lie in (0, 1)");

  FdpReport rep;
  rep.grid = grid;
  rep.alpha = alpha;
  rep.pvalue_kind = kind;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    const auto r = empirical_counts(pvalues, grid[i]).r;
    const auto point = fdp_estimate(a, eta, grid[i], r);
    rep.r.push_back(r);
    rep.v_sum.push_back(point.v_hat);
    rep.v_hat.push_back(std::min(point.v_hat, static_cast<double>(r)));
    rep.fdp_hat.push_back(point.fdp_hat);
    if (point.fdp_hat <= alpha) {
      rep.t_alpha = grid[i];
      rep.t_alpha_index = i;
    }
  }
  return rep;
}

PfaResult run_pfa(const Eigen::VectorXd& z, const Eigen::MatrixXd& corr, const Eigen::VectorXd& p_raw,
                  const PfaOptions& opts) {
  PfaResult out;
  auto& model = out.model;
  model.spectrum = spectral_decompose(corr);
  model.k = choose_k(model.spectrum.eigenvalues, opts.k);
  model.loadings = factor_loadings(model.spectrum, model.k);
  model.regression = opts.regression;
  if (model.k > 0) {
    model.factors = opts.regression == FactorRegression::l2 ? estimate_factors_l2(z, model.loadings.b, opts.trim)
                                                            : estimate_factors_l1(z, model.loadings.b, opts.l1);
    model.eta_hat = model.loadings.b * model.factors.w;
  } else {
    model.factors.used = 0;
    model.eta_hat = Eigen::VectorXd::Zero(z.size());
  }
  out.p_adjusted = adjusted_pvalues(z, model.loadings.a, model.eta_hat);
  const Eigen::VectorXd& counted = opts.count == CountMode::adjusted ? out.p_adjusted : p_raw;
  out.report = threshold_search(model.loadings.a, model.eta_hat, counted, opts.alpha, opts.grid, opts.count);
  return out;
}

}  // namespace multipfa
