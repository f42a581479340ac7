#include "multipfa/analyze.hpp"

#include <algorithm>
#include <sstream>

#include "multipfa/error.hpp"
#include "multipfa/parallel.hpp"
#include "multipfa/report.hpp"

namespace multipfa {

AnalysisResult run_analysis(const Dataset& data, const AnalyzeOptions& opts) {
  require_valid(data);
  AnalysisResult result;
  result.dataset = opts.tic ? tic_normalize(data) : data;
  const Dataset& d = result.dataset;

  // Fit coding: the non-baseline codes in ascending order become 1..q−1, the
  // baseline becomes q.
  std::vector<int> original_of_fit;
  std::vector<int> fit_of_original(static_cast<std::size_t>(d.q + 1), 0);
  for (int c = 1; c <= d.q; ++c) {
    if (c == d.baseline) continue;
    original_of_fit.push_back(c);
    fit_of_original[static_cast<std::size_t>(c)] = static_cast<int>(original_of_fit.size());
  }
  fit_of_original[static_cast<std::size_t>(d.baseline)] = d.q;
  std::vector<int> ys(d.response.size());
  for (std::size_t i = 0; i < ys.size(); ++i) ys[i] = fit_of_original[static_cast<std::size_t>(d.response[i])];

  result.fits = fit_all(d.features, ys, d.q, opts.fit, resolve_threads(opts.threads));
  result.failed_fits = static_cast<int>(
      std::count_if(result.fits.begin(), result.fits.end(), [](const MarginalFit& f) { return !f.ok(); }));
  result.baseline_label = d.category_labels[static_cast<std::size_t>(d.baseline - 1)];

  PfaOptions pfa_opts;
  pfa_opts.k = opts.k;
  pfa_opts.regression = opts.regression;
  pfa_opts.trim = opts.trim;
  pfa_opts.count = opts.count;
  pfa_opts.alpha = opts.alpha;
  pfa_opts.grid = log_grid(opts.grid_min, opts.grid_max, opts.grid_points);

  for (int fc = 1; fc < d.q; ++fc) {
    CategoryResult cr;
    cr.code = original_of_fit[static_cast<std::size_t>(fc - 1)];
    cr.label = d.category_labels[static_cast<std::size_t>(cr.code - 1)];
    cr.inference = infer_category(result.fits, fc);
    if (const auto* ex = std::get_if<ExplicitK>(&opts.k); ex && ex->k > cr.inference.active_count())
      throw ValidationError("k = " + std::to_string(ex->k) + " exceeds the " +
                            std::to_string(cr.inference.active_count()) + " successfully fitted features");
    cr.pfa = run_pfa(cr.inference.z, cr.inference.corr_hat, cr.inference.p_raw, pfa_opts);
    result.categories.push_back(std::move(cr));
  }
  return result;
}

std::vector<std::string> write_analysis(const AnalysisResult& result, const std::filesystem::path& dir,
                                        const OutputOptions& out) {
  std::error_code ec;
  std::filesystem::create_directories(dir, ec);
  if (ec) throw IoError("cannot create output directory " + dir.string() + ": " + ec.message());
  std::vector<std::string> written;
  const auto emit = [&](const std::string& name, const std::string& content) {
    atomic_write(dir / name, content);
    written.push_back(name);
  };
  const auto& names = result.dataset.feature_names;
  for (const auto& cr : result.categories) {
    const std::string tag = std::to_string(cr.code);
    emit("features_" + tag + ".csv", features_csv(cr.inference, names, &cr.pfa.p_adjusted));
    emit("fdp_" + tag + ".csv", fdp_csv(cr.pfa.report));
    auto summary = pfa_summary_json(cr.pfa);
    summary["category"] = cr.code;
    summary["category_label"] = cr.label;
    summary["baseline_label"] = result.baseline_label;
    summary["features"] = cr.inference.p;
    summary["active_features"] = cr.inference.active_count();
    summary["failed_fits"] = result.failed_fits;
    summary["masked_features"] = cr.inference.p - cr.inference.active_count();
    emit("summary_" + tag + ".json", summary.dump(2) + "\n");
    if (out.dump_corr) emit("corr_" + tag + ".csv", corr_csv(cr.inference, names));
  }
  if (out.diagnostics) {
    std::ostringstream diag;
    for (std::size_t j = 0; j < result.fits.size(); ++j)
      diag << diagnostics_json(result.fits[j], static_cast<Eigen::Index>(j), names[j]).dump() << '\n';
    emit("diagnostics.jsonl", diag.str());
  }
  return written;
}

nlohmann::json to_json(const AnalyzeOptions& opts) {
  nlohmann::json k;
  if (const auto* ex = std::get_if<ExplicitK>(&opts.k))
    k = ex->k;
  else
    k = {{"auto", true}, {"tau", std::get<ThresholdK>(opts.k).tau}};
  return {{"k", k},
          {"factor_reg", to_string(opts.regression)},
          {"alpha", opts.alpha},
          {"grid_min", opts.grid_min},
          {"grid_max", opts.grid_max},
          {"grid_points", opts.grid_points},
          {"count", to_string(opts.count)},
          {"trim", opts.trim},
          {"tic", opts.tic},
          {"max_iter", opts.fit.max_iter},
          {"grad_tol", opts.fit.grad_tol},
          {"sep_bound", opts.fit.separation_bound}};
}

}  // namespace multipfa
