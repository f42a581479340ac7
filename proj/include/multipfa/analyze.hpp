#pragma once

#include <filesystem>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "multipfa/data.hpp"
#include "multipfa/mmm.hpp"
#include "multipfa/multinomial.hpp"
#include "multipfa/pfa.hpp"

namespace multipfa {

struct AnalyzeOptions {
  KPolicy k = ThresholdK{0.01};
  FactorRegression regression = FactorRegression::l1;
  double alpha = 0.05;
  double grid_min = 1e-8;
  double grid_max = 0.05;
  int grid_points = 200;
  CountMode count = CountMode::adjusted;
  double trim = 0.95;
  bool tic = false;
  FitOptions fit;
  unsigned threads = 0;
};

/// Results for one non-baseline category against the baseline.
struct CategoryResult {
  int code = 0;  // category code in the dataset
  std::string label;
  CategoryInference inference;
  PfaResult pfa;
};

struct AnalysisResult {
  Dataset dataset;  // after optional TIC normalization
  std::vector<MarginalFit> fits;
  std::vector<CategoryResult> categories;
  std::string baseline_label;
  int failed_fits = 0;
};

/// Per-feature fits, per-category joint inference and PFA. The dataset's
/// baseline category plays the role of the reference level.
AnalysisResult run_analysis(const Dataset& data, const AnalyzeOptions& opts);

struct OutputOptions {
  bool dump_corr = false;
  bool diagnostics = false;
};

/// Writes features_<c>.csv, fdp_<c>.csv, summary_<c>.json per category (and
/// corr_<c>.csv / diagnostics.jsonl when requested) into `dir`. Returns the
/// names of the files written.
std::vector<std::string> write_analysis(const AnalysisResult& result, const std::filesystem::path& dir,
                                        const OutputOptions& out = {});

nlohmann::json to_json(const AnalyzeOptions& opts);

}  // namespace multipfa
