#include "multipfa/simulate.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>
#include <string>

#include "multipfa/error.hpp"
#include "multipfa/mmm.hpp"
#include "multipfa/parallel.hpp"

namespace multipfa {

namespace {

double median(std::vector<double> v) {
  if (v.empty()) return std::nan("");
  std::sort(v.begin(), v.end());
  const std::size_t mid = v.size() / 2;
  return v.size() % 2 == 1 ? v[mid] : 0.5 * (v[mid - 1] + v[mid]);
}

double mean(const std::vector<double>& v) {
  if (v.empty()) return std::nan("");
  return std::accumulate(v.begin(), v.end(), 0.0) / static_cast<double>(v.size());
}

double sd(const std::vector<double>& v) {
  if (v.size() < 2) return 0.0;
  const double m = mean(v);
  double ss = 0.0;
  for (double x : v) ss += (x - m) * (x - m);
  return std::sqrt(ss / static_cast<double>(v.size() - 1));
}

double bootstrap_median_se(const std::vector<double>& v, int resamples, Rng& rng) {
  if (v.size() < 2 || resamples < 2) return 0.0;
  std::vector<double> medians;
  medians.reserve(static_cast<std::size_t>(resamples));
  std::vector<double> draw(v.size());
  for (int b = 0; b < resamples; ++b) {
    for (auto& d : draw) d = v[static_cast<std::size_t>(rng.below(v.size()))];
    medians.push_back(median(draw));
  }
  return sd(medians);
}

constexpr std::uint64_t kBootstrapStream = 0xB0075712A9ULL;

}  // namespace

void SimConfig::validate() const {
  const auto bad = [](const std::string& msg) { throw ValidationError("invalid simulation config: " + msg); };
  if (scenario != 1 && scenario != 2) bad("scenario must be 1 or 2");
  if (n < 5) bad("n must be at least q + 2 = 5");
  if (p < 1) bad("p must be positive");
  if (p1 < 0 || p1 > p) bad("p1 must lie in [0, p]");
  if (scenario == 2) {
    if (p1 >= p) bad("scenario 2 needs p1 < p");
    const int p0 = p - p1;
    const double lower = p0 > 1 ? -1.0 / (p0 - 1) : -1.0;
    if (!(rho > lower && rho < 1.0)) bad("rho must lie in (" + std::to_string(lower) + ", 1)");
  }
  if (!std::isfinite(beta_active)) bad("beta_active must be finite");
  if (k < 0) bad("k must be non-negative");
  if (!(t_fixed > 0.0 && t_fixed < 1.0)) bad("t_fixed must lie in (0, 1)");
  if (!(alpha > 0.0 && alpha < 1.0)) bad("alpha must lie in (0, 1)");
  if (reps < 1) bad("reps must be at least 1");
  if (!(trim > 0.0 && trim <= 1.0)) bad("trim must lie in (0, 1]");
  if (!(grid_min > 0.0 && grid_max < 1.0 && grid_min <= grid_max) || grid_points < 1) bad("invalid threshold grid");
  if (bootstrap_resamples < 0) bad("bootstrap_resamples must be non-negative");
}

Eigen::MatrixXd gen_features_scenario1(int n, int p, Rng& rng) {
  Eigen::MatrixXd x(n, p);
  for (int j = 0; j < p; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.normal();
  return x;
}

Eigen::MatrixXd gen_features_scenario2(int n, int p, int p1, double rho, Rng& rng) {
  const int p0 = p - p1;
  if (p1 < 0 || p0 < 1) throw ValidationError("scenario 2 needs 0 <= p1 < p");
  const double lower = p0 > 1 ? -1.0 / (p0 - 1) : -1.0;
  if (!(rho > lower && rho < 1.0)) throw ValidationError("rho outside the positive-definite range");

  Eigen::MatrixXd x(n, p);
  for (int j = 0; j < p1; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.normal();

  Eigen::VectorXd common(n);
  for (int i = 0; i < n; ++i) common[i] = rng.normal();
  for (int j = p1; j < p; ++j)
    for (int i = 0; i < n; ++i) x(i, j) = rng.normal();

  auto block = x.rightCols(p0);
  if (rho >= 0.0) {
    // One-factor construction: sqrt(ρ)·G·1ᵀ + sqrt(1 − ρ)·E.
    block *= std::sqrt(1.0 - rho);
    block.colwise() += std::sqrt(rho) * common;
  } else {
    // Negative ρ: shrink each row towards its mean, sqrt(1 − ρ)(E − κ·Ē·1ᵀ)
    // with κ = 1 − sqrt(1 + ρ·p0 / (1 − ρ)).
    const double kappa = 1.0 - std::sqrt(1.0 + rho * p0 / (1.0 - rho));
    const Eigen::VectorXd row_mean = block.rowwise().mean();
    block.colwise() -= kappa * row_mean;
    block *= std::sqrt(1.0 - rho);
  }
  return x;
}

std::vector<int> gen_response(const Eigen::MatrixXd& x, int p1, double beta_active, Rng& rng) {
  if (p1 < 0 || p1 > x.cols()) throw ValidationError("p1 outside [0, p]");
  std::vector<int> y(static_cast<std::size_t>(x.rows()));
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    const double eta = beta_active * (p1 > 0 ? x.row(i).head(p1).sum() : 0.0);
    // (e^η, e^η, 1) / (1 + 2e^η), evaluated without overflow.
    const double pi_base = eta > 0.0 ? std::exp(-eta) / (std::exp(-eta) + 2.0) : 1.0 / (1.0 + 2.0 * std::exp(eta));
    const double pi_one = 0.5 * (1.0 - pi_base);
    const double u = rng.uniform();
    y[static_cast<std::size_t>(i)] = u < pi_one ? 1 : (u < 2.0 * pi_one ? 2 : 3);
  }
  return y;
}

std::vector<RepRecord> run_repetition(const SimConfig& cfg, int rep) {
  Rng rng(derive_seed(cfg.seed, static_cast<std::uint64_t>(rep)));
  const Eigen::MatrixXd x = cfg.scenario == 1 ? gen_features_scenario1(cfg.n, cfg.p, rng)
                                              : gen_features_scenario2(cfg.n, cfg.p, cfg.p1, cfg.rho, rng);
  const std::vector<int> y = gen_response(x, cfg.p1, cfg.beta_active, rng);
  const auto fits = fit_all(x, y, 3, cfg.fit, 1);
  const int failed = static_cast<int>(std::count_if(fits.begin(), fits.end(), [](const auto& f) { return !f.ok(); }));

  PfaOptions opts;
  opts.regression = FactorRegression::l2;
  opts.trim = cfg.trim;
  opts.count = cfg.count;
  opts.alpha = cfg.alpha;
  opts.grid = log_grid(cfg.grid_min, cfg.grid_max, cfg.grid_points);

  std::vector<RepRecord> out;
  for (int c = 1; c <= 2; ++c) {
    const CategoryInference ci = infer_category(fits, c);
    opts.k = ExplicitK{std::min<int>(cfg.k, static_cast<int>(ci.active_count()))};
    const PfaResult pfa = run_pfa(ci.z, ci.corr_hat, ci.p_raw, opts);

    std::vector<bool> truth(ci.active_index.size());
    for (std::size_t j = 0; j < ci.active_index.size(); ++j) truth[j] = ci.active_index[j] >= cfg.p1;

    const Eigen::VectorXd& counted = cfg.count == CountMode::adjusted ? pfa.p_adjusted : ci.p_raw;
    const Counts at_t = empirical_counts(counted, cfg.t_fixed, truth);

    RepRecord rec;
    rec.rep = rep;
    rec.category = c;
    rec.k = pfa.model.k;
    rec.failed_fits = failed;
    rec.r_t = at_t.r;
    rec.v_t = *at_t.v;
    rec.s_t = *at_t.s;
    rec.fdp_t = fdp_estimate(pfa.model.loadings.a, pfa.model.eta_hat, cfg.t_fixed, at_t.r).fdp_hat;
    rec.t_alpha = pfa.report.t_alpha;
    if (rec.t_alpha) rec.s_t_alpha = *empirical_counts(counted, *rec.t_alpha, truth).s;

    if (rec.r_t != rec.v_t + rec.s_t || rec.s_t > cfg.p1 || rec.v_t > cfg.p - cfg.p1)
      throw std::logic_error("rejection bookkeeping violated in repetition " + std::to_string(rep));
    out.push_back(rec);
  }
  return out;
}

SummaryTable summarize(const std::vector<RepRecord>& records, const SimConfig& cfg) {
  SummaryTable table;
  for (int c = 1; c <= 2; ++c) {
    std::vector<double> fdp, r, s, t_alpha, s_alpha;
    CategorySummary row;
    row.category = c;
    for (const auto& rec : records) {
      if (rec.category != c) continue;
      fdp.push_back(rec.fdp_t);
      r.push_back(static_cast<double>(rec.r_t));
      s.push_back(static_cast<double>(rec.s_t));
      if (rec.t_alpha) {
        t_alpha.push_back(*rec.t_alpha);
        s_alpha.push_back(static_cast<double>(rec.s_t_alpha));
      } else {
        ++row.reps_without_t_alpha;
      }
    }
    Rng boot(derive_seed(cfg.seed, kBootstrapStream + static_cast<std::uint64_t>(c)));
    row.median_fdp = median(fdp);
    row.se_fdp = bootstrap_median_se(fdp, cfg.bootstrap_resamples, boot);
    row.mean_r = mean(r);
    row.se_r = sd(r);
    row.mean_s = mean(s);
    row.se_s = sd(s);
    row.median_t_alpha = median(t_alpha);
    row.mean_s_t_alpha = mean(s_alpha);
    table.rows.push_back(row);
  }
  return table;
}

MonteCarloResult run_monte_carlo(const SimConfig& cfg, unsigned threads) {
  cfg.validate();
  std::vector<std::vector<RepRecord>> per_rep(static_cast<std::size_t>(cfg.reps));
  parallel_for(per_rep.size(), threads, [&](std::size_t rep) { per_rep[rep] = run_repetition(cfg, static_cast<int>(rep)); });
  MonteCarloResult result;
  for (auto& recs : per_rep)
    for (auto& rec : recs) result.records.push_back(rec);
  result.summary = summarize(result.records, cfg);
  return result;
}

}  // namespace multipfa
