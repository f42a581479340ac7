#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "multipfa/multinomial.hpp"
#include "multipfa/pfa.hpp"
#include "multipfa/rng.hpp"

namespace multipfa {

/// Monte Carlo design. Scenario 1: i.i.d. N(0,1) features. Scenario 2: the
/// p − p1 inactive features are equi-correlated with correlation rho and
/// independent of the active block.
struct SimConfig {
  int scenario = 1;
  int n = 500;
  int p = 500;
  int p1 = 10;
  double rho = 0.0;
  double beta_active = 1.0;
  int k = 10;
  double t_fixed = 1e-4;
  double alpha = 0.05;
  int reps = 1000;
  std::uint64_t seed = 1;
  CountMode count = CountMode::adjusted;
  double trim = 0.95;
  double grid_min = 1e-8;
  double grid_max = 0.05;
  int grid_points = 200;
  int bootstrap_resamples = 1000;
  FitOptions fit;

  /// Throws ValidationError when the design is inconsistent.
  void validate() const;
};

Eigen::MatrixXd gen_features_scenario1(int n, int p, Rng& rng);
Eigen::MatrixXd gen_features_scenario2(int n, int p, int p1, double rho, Rng& rng);

/// Three-category response with zero intercepts and identical slopes
/// beta_active on the first p1 features for both non-baseline categories.
std::vector<int> gen_response(const Eigen::MatrixXd& x, int p1, double beta_active, Rng& rng);

/// Outcome of one repetition for one baseline-category pair.
struct RepRecord {
  int rep = 0;
  int category = 0;
  int k = 0;
  int failed_fits = 0;
  double fdp_t = 0.0;  // FDP̂(t_fixed)
  Eigen::Index r_t = 0;
  Eigen::Index v_t = 0;
  Eigen::Index s_t = 0;
  std::optional<double> t_alpha;
  Eigen::Index s_t_alpha = 0;
};

struct CategorySummary {
  int category = 0;
  double median_fdp = 0.0;
  double se_fdp = 0.0;  // bootstrap standard error of the median
  double mean_r = 0.0;
  double se_r = 0.0;  // standard deviation across repetitions
  double mean_s = 0.0;
  double se_s = 0.0;
  double median_t_alpha = 0.0;
  double mean_s_t_alpha = 0.0;
  int reps_without_t_alpha = 0;
};

struct SummaryTable {
  std::vector<CategorySummary> rows;  // c = 1, 2
};

struct MonteCarloResult {
  SummaryTable summary;
  std::vector<RepRecord> records;  // ordered by (rep, category)
};

/// Runs one repetition (exposed for tests); the records for c = 1, 2.
std::vector<RepRecord> run_repetition(const SimConfig& cfg, int rep);

MonteCarloResult run_monte_carlo(const SimConfig& cfg, unsigned threads = 1);

/// Aggregates per-repetition records; deterministic in the record order.
SummaryTable summarize(const std::vector<RepRecord>& records, const SimConfig& cfg);

}  // namespace multipfa
