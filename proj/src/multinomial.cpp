#include "multipfa/multinomial.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>

#include "multipfa/parallel.hpp"

namespace multipfa {

namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();

void check_inputs(int q, std::span<const double> xs, std::span<const int> ys) {
  if (xs.size() != ys.size())
    throw std::invalid_argument("xs has " + std::to_string(xs.size()) + " entries, ys has " +
                                std::to_string(ys.size()));
  for (int y : ys)
    if (y < 1 || y > q) throw std::invalid_argument("response code " + std::to_string(y) + " outside 1..q");
}

// Fills pi[0..m) with the non-baseline probabilities and returns
// log(1 + Σ exp(eta_c)), both computed after subtracting the largest logit.
double unit_probs(const double* theta, int m, double x, double* eta, double* pi) {
  double top = 0.0;
  for (int c = 0; c < m; ++c) {
    eta[c] = theta[2 * c] + theta[2 * c + 1] * x;
    top = std::max(top, eta[c]);
  }
  double denom = std::exp(-top);
  for (int c = 0; c < m; ++c) {
    pi[c] = std::exp(eta[c] - top);
    denom += pi[c];
  }
  for (int c = 0; c < m; ++c) pi[c] /= denom;
  return top + std::log(denom);
}

struct Evaluation {
  double loglik = 0.0;
  Eigen::VectorXd gradient;
  Eigen::MatrixXd fisher;  // averaged; only filled on request
};

Evaluation evaluate(const Eigen::VectorXd& theta, std::span<const double> xs, std::span<const int> ys, int q,
                    bool with_fisher) {
  const int m = q - 1;
  const int dim = 2 * m;
  Evaluation ev;
  ev.gradient = Eigen::VectorXd::Zero(dim);
  if (with_fisher) ev.fisher = Eigen::MatrixXd::Zero(dim, dim);
  std::vector<double> eta(static_cast<std::size_t>(m)), pi(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = xs[i];
    const int y = ys[i];
    const double lse = unit_probs(theta.data(), m, x, eta.data(), pi.data());
    ev.loglik += (y < q ? eta[static_cast<std::size_t>(y - 1)] : 0.0) - lse;
    for (int c = 0; c < m; ++c) {
      const double resid = (y == c + 1 ? 1.0 : 0.0) - pi[static_cast<std::size_t>(c)];
      ev.gradient[2 * c] += resid;
      ev.gradient[2 * c + 1] += resid * x;
    }
    if (!with_fisher) continue;
    for (int a = 0; a < m; ++a) {
      for (int b = 0; b < m; ++b) {
        const double w = pi[static_cast<std::size_t>(a)] * ((a == b ? 1.0 : 0.0) - pi[static_cast<std::size_t>(b)]);
        ev.fisher(2 * a, 2 * b) += w;
        ev.fisher(2 * a, 2 * b + 1) += w * x;
        ev.fisher(2 * a + 1, 2 * b) += w * x;
        ev.fisher(2 * a + 1, 2 * b + 1) += w * x * x;
      }
    }
  }
  if (with_fisher && !xs.empty()) ev.fisher /= static_cast<double>(xs.size());
  return ev;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() == 0 ? 0.0 : v.cwiseAbs().maxCoeff(); }

// Block-diagonal map from original to standardized coordinates:
// α' = α + β·mean, β' = β·sd.
Eigen::MatrixXd standardizing_map(int m, double mean, double sd) {
  Eigen::MatrixXd t = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (int c = 0; c < m; ++c) {
    t(2 * c, 2 * c) = 1.0;
    t(2 * c, 2 * c + 1) = mean;
    t(2 * c + 1, 2 * c + 1) = sd;
  }
  return t;
}

MarginalFit failed(MarginalFit fit, FitStatus status, std::string reason) {
  fit.status = status;
  fit.reason = std::move(reason);
  fit.converged = false;
  fit.influence.resize(0, 0);
  return fit;
}

}  // namespace

Eigen::VectorXd MarginalParams::packed() const {
  Eigen::VectorXd theta(2 * alpha.size());
  for (Eigen::Index c = 0; c < alpha.size(); ++c) {
    theta[2 * c] = alpha[c];
    theta[2 * c + 1] = beta[c];
  }
  return theta;
}

MarginalParams MarginalParams::unpack(const Eigen::VectorXd& theta) {
  MarginalParams p;
  const Eigen::Index m = theta.size() / 2;
  p.alpha.resize(m);
  p.beta.resize(m);
  for (Eigen::Index c = 0; c < m; ++c) {
    p.alpha[c] = theta[2 * c];
    p.beta[c] = theta[2 * c + 1];
  }
  return p;
}

MarginalParams MarginalParams::zeros(int q) {
  return {Eigen::VectorXd::Zero(q - 1), Eigen::VectorXd::Zero(q - 1)};
}

std::string_view to_string(FitStatus status) {
  switch (status) {
    case FitStatus::ok: return "ok";
    case FitStatus::max_iterations: return "max-iterations";
    case FitStatus::separation_detected: return "separation-detected";
    case FitStatus::singular_information: return "singular-information";
    case FitStatus::stalled: return "stalled";
  }
  return "unknown";
}

Eigen::VectorXd category_probs(const MarginalParams& params, double x) {
  const int m = static_cast<int>(params.alpha.size());
  const Eigen::VectorXd theta = params.packed();
  std::vector<double> eta(static_cast<std::size_t>(m)), pi(static_cast<std::size_t>(m));
  const double lse = unit_probs(theta.data(), m, x, eta.data(), pi.data());
  Eigen::VectorXd out(m + 1);
  for (int c = 0; c < m; ++c) out[c] = pi[static_cast<std::size_t>(c)];
  out[m] = std::exp(-lse);
  return out;
}

double log_likelihood(const MarginalParams& params, std::span<const double> xs, std::span<const int> ys) {
  const int q = params.categories();
  check_inputs(q, xs, ys);
  return evaluate(params.packed(), xs, ys, q, false).loglik;
}

ScoreFisher score_and_fisher(const MarginalParams& params, std::span<const double> xs, std::span<const int> ys) {
  const int q = params.categories();
  check_inputs(q, xs, ys);
  auto ev = evaluate(params.packed(), xs, ys, q, true);
  return {std::move(ev.gradient), std::move(ev.fisher)};
}

MarginalFit fit_marginal(std::span<const double> xs, std::span<const int> ys, int q, const FitOptions& opts) {
  MarginalFit fit;
  fit.params = MarginalParams::zeros(std::max(q, 2));
  if (q < 2) return failed(std::move(fit), FitStatus::singular_information, "q < 2");
  if (xs.size() != ys.size()) return failed(std::move(fit), FitStatus::singular_information, "length mismatch");
  const auto n = xs.size();
  const int m = q - 1;
  const int dim = 2 * m;

  std::vector<std::size_t> counts(static_cast<std::size_t>(q), 0);
  for (int y : ys) {
    if (y < 1 || y > q)
      return failed(std::move(fit), FitStatus::singular_information, "response code outside 1..q");
    ++counts[static_cast<std::size_t>(y - 1)];
  }
  for (int c = 0; c < q; ++c)
    if (counts[static_cast<std::size_t>(c)] == 0)
      return failed(std::move(fit), FitStatus::singular_information,
                    "category " + std::to_string(c + 1) + " absent");

  double mean = 0.0;
  for (double x : xs) mean += x;
  mean /= static_cast<double>(n);
  double var = 0.0;
  for (double x : xs) var += (x - mean) * (x - mean);
  const double sd = std::sqrt(var / static_cast<double>(n));
  if (!std::isfinite(sd) || !(sd > 64.0 * kEps * std::max(1.0, std::abs(mean))))
    return failed(std::move(fit), FitStatus::singular_information, "constant feature");

  // Newton iterations run on the standardized feature; estimates, gradient and
  // information are mapped back to the original scale at the end.
  std::vector<double> z(n);
  for (std::size_t i = 0; i < n; ++i) z[i] = (xs[i] - mean) / sd;
  const std::span<const double> zs(z);
  const Eigen::MatrixXd to_std = standardizing_map(m, mean, sd);

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(dim);
  for (int c = 0; c < m; ++c)
    theta[2 * c] = std::log(static_cast<double>(counts[static_cast<std::size_t>(c)]) /
                            static_cast<double>(counts[static_cast<std::size_t>(m)]));

  const auto to_original = [&](const Eigen::VectorXd& th) {
    MarginalParams p = MarginalParams::unpack(th);
    for (int c = 0; c < m; ++c) {
      p.beta[c] = p.beta[c] / sd;
      p.alpha[c] = p.alpha[c] - p.beta[c] * mean;
    }
    return p;
  };

  Evaluation ev;
  Eigen::LLT<Eigen::MatrixXd> llt;
  int tiny_changes = 0;
  bool last_tiny = false;
  double prev_gnorm = 0.0;
  for (int iter = 0;; ++iter) {
    ev = evaluate(theta, zs, ys, q, true);
    if (iter == 0) fit.loglik_trace.push_back(ev.loglik);
    fit.iterations = iter;
    fit.params = to_original(theta);
    fit.log_likelihood = ev.loglik;
    const Eigen::VectorXd grad_orig = to_std.transpose() * ev.gradient;
    fit.grad_norm = sup_norm(grad_orig);
    const double gnorm = std::max(sup_norm(ev.gradient), fit.grad_norm);
    // Near the optimum the log-likelihood flattens long before the gradient
    // vanishes, so a step only counts as stationary if the gradient held up too.
    if (iter > 0) tiny_changes = last_tiny && gnorm > 0.5 * prev_gnorm ? tiny_changes + 1 : 0;
    prev_gnorm = gnorm;

    double slope_max = 0.0;
    for (int c = 0; c < m; ++c) slope_max = std::max(slope_max, std::abs(theta[2 * c + 1]));
    if (!(slope_max <= opts.separation_bound))
      return failed(std::move(fit), FitStatus::separation_detected,
                    "standardized slope exceeds " + std::to_string(opts.separation_bound));
    if (gnorm <= opts.grad_tol) break;
    if (iter >= opts.max_iter) return failed(std::move(fit), FitStatus::max_iterations, "iteration limit reached");
    if (tiny_changes >= 2)
      return failed(std::move(fit), FitStatus::stalled, "log-likelihood stationary above gradient tolerance");

    const double ridge = 1e-10 * ev.fisher.trace() / dim;
    llt.compute(ev.fisher + ridge * Eigen::MatrixXd::Identity(dim, dim));
    if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
      return failed(std::move(fit), FitStatus::singular_information, "information matrix not invertible");
    const Eigen::VectorXd step = llt.solve(ev.gradient) / static_cast<double>(n);

    // Step halving; the slack absorbs rounding in the summed log-likelihood.
    // Once the predicted gain is below that level the comparison is noise and
    // the full step is taken.
    const double slack = 16.0 * std::sqrt(static_cast<double>(n)) * kEps * std::max(1.0, std::abs(ev.loglik));
    const bool rounding_regime = 0.5 * ev.gradient.dot(step) <= slack;
    double scale = 1.0;
    bool accepted = false;
    Eigen::VectorXd candidate;
    double cand_ll = 0.0;
    for (int h = 0; h <= opts.max_halvings; ++h, scale *= 0.5) {
      candidate = theta + scale * step;
      cand_ll = evaluate(candidate, zs, ys, q, false).loglik;
      if (std::isfinite(cand_ll) && (rounding_regime || cand_ll >= ev.loglik - slack)) {
        accepted = true;
        break;
      }
    }
    if (!accepted) return failed(std::move(fit), FitStatus::stalled, "no ascent step found");
    const double rel = std::abs(cand_ll - ev.loglik) / std::max(1.0, std::abs(ev.loglik));
    last_tiny = rel <= opts.rel_loglik_tol;
    theta = candidate;
    fit.loglik_trace.push_back(cand_ll);
  }

  const double ridge = 1e-10 * ev.fisher.trace() / dim;
  llt.compute(ev.fisher + ridge * Eigen::MatrixXd::Identity(dim, dim));
  if (llt.info() != Eigen::Success || !(llt.rcond() > 1e-13))
    return failed(std::move(fit), FitStatus::singular_information, "information matrix not invertible");

  // Per-unit scores in standardized coordinates, one column per unit.
  Eigen::MatrixXd scores(dim, static_cast<Eigen::Index>(n));
  std::vector<double> eta(static_cast<std::size_t>(m)), pi(static_cast<std::size_t>(m));
  for (std::size_t i = 0; i < n; ++i) {
    unit_probs(theta.data(), m, z[i], eta.data(), pi.data());
    for (int c = 0; c < m; ++c) {
      const double resid = (ys[i] == c + 1 ? 1.0 : 0.0) - pi[static_cast<std::size_t>(c)];
      scores(2 * c, static_cast<Eigen::Index>(i)) = resid;
      scores(2 * c + 1, static_cast<Eigen::Index>(i)) = resid * z[i];
    }
  }
  const Eigen::MatrixXd psi = llt.solve(scores);
  fit.influence.resize(static_cast<Eigen::Index>(n), m);
  for (int c = 0; c < m; ++c) fit.influence.col(c) = psi.row(2 * c + 1).transpose() / sd;

  fit.fisher = to_std.transpose() * ev.fisher * to_std;
  fit.fisher = 0.5 * (fit.fisher + fit.fisher.transpose()).eval();
  fit.status = FitStatus::ok;
  fit.converged = true;
  fit.reason.clear();
  return fit;
}

std::vector<MarginalFit> fit_all(const Eigen::MatrixXd& features, std::span<const int> ys, int q,
                                 const FitOptions& opts, unsigned threads) {
  std::vector<MarginalFit> fits(static_cast<std::size_t>(features.cols()));
  const auto n = static_cast<std::size_t>(features.rows());
  parallel_for(fits.size(), threads, [&](std::size_t j) {
    const std::span<const double> col(features.col(static_cast<Eigen::Index>(j)).data(), n);
    fits[j] = fit_marginal(col, ys, q, opts);
  });
  return fits;
}

nlohmann::json diagnostics_json(const MarginalFit& fit, Eigen::Index feature, std::string_view name) {
  nlohmann::json j = {{"feature", feature},
                      {"name", name},
                      {"status", to_string(fit.status)},
                      {"converged", fit.converged},
                      {"iterations", fit.iterations},
                      {"grad_norm", fit.grad_norm},
                      {"log_likelihood", fit.log_likelihood},
                      {"alpha", std::vector<double>(fit.params.alpha.begin(), fit.params.alpha.end())},
                      {"beta", std::vector<double>(fit.params.beta.begin(), fit.params.beta.end())}};
  if (!fit.reason.empty()) j["reason"] = fit.reason;
  return j;
}

}  // namespace multipfa
