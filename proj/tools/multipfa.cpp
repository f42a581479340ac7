// multipfa: dependence-aware multiple testing for a nominal response.
//
//   multipfa analyze  --input data.csv --label subtype --out results/
//   multipfa simulate --scenario 2 --rho 0.5 --k 1 --reps 200 --out sim/
//
// Exit codes: 0 success, 1 internal error, 2 invalid input or configuration,
// 3 I/O failure.

#include <algorithm>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <nlohmann/json.hpp>

#include "multipfa/analyze.hpp"
#include "multipfa/data.hpp"
#include "multipfa/error.hpp"
#include "multipfa/parallel.hpp"
#include "multipfa/report.hpp"
#include "multipfa/simulate.hpp"

namespace fs = std::filesystem;
using namespace multipfa;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitInternal = 1;
constexpr int kExitInvalid = 2;
constexpr int kExitIo = 3;

struct AnalyzeFlags {
  std::string input;
  std::string label;
  std::optional<std::string> baseline;
  std::string k = "auto";
  std::string factor_reg = "l1";
  bool count_raw = false;
  bool dump_corr = false;
  bool diagnostics = false;
  std::string out;
  AnalyzeOptions opts;
};

struct SimulateFlags {
  SimConfig cfg;
  bool count_raw = false;
  std::string out;
  unsigned threads = 0;
};

// Turns `key = value` lines into leading "--key value" tokens, so that flags
// given on the command line (parsed later) take precedence.
std::vector<std::string> config_tokens(const fs::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config file " + path.string());
  std::vector<std::string> tokens;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (const auto hash = line.find('#'); hash != std::string::npos) line.erase(hash);
    const auto eq = line.find('=');
    const auto strip = [](std::string s) {
      const auto a = s.find_first_not_of(" \t\r");
      if (a == std::string::npos) return std::string();
      const auto b = s.find_last_not_of(" \t\r");
      return s.substr(a, b - a + 1);
    };
    if (strip(line).empty()) continue;
    if (eq == std::string::npos)
      throw ValidationError(path.string() + ":" + std::to_string(lineno) + ": expected key = value");
    const std::string key = strip(line.substr(0, eq));
    const std::string value = strip(line.substr(eq + 1));
    if (key == "count-raw") {
      if (value == "true" || value == "1") tokens.push_back("--count-raw");
      continue;
    }
    tokens.push_back("--" + key);
    tokens.push_back(value);
  }
  return tokens;
}

nlohmann::json manifest_base(const std::string& command, const std::string& started) {
  return {{"command", command}, {"tool_version", MULTIPFA_VERSION}, {"started_at", started}};
}

void write_manifest(const fs::path& dir, nlohmann::json manifest) {
  manifest["finished_at"] = utc_timestamp();
  atomic_write(dir / "manifest.json", manifest.dump(2) + "\n");
}

int run_analyze(AnalyzeFlags& f) {
  const std::string started = utc_timestamp();
  AnalyzeOptions& opts = f.opts;
  if (f.k == "auto") {
    opts.k = ThresholdK{0.01};
  } else {
    try {
      std::size_t pos = 0;
      const int k = std::stoi(f.k, &pos);
      if (pos != f.k.size() || k < 0) throw std::invalid_argument("k");
      opts.k = ExplicitK{k};
    } catch (const std::exception&) {
      throw ValidationError("--k must be a non-negative integer or 'auto'");
    }
  }
  opts.regression = f.factor_reg == "l2" ? FactorRegression::l2 : FactorRegression::l1;
  opts.count = f.count_raw ? CountMode::raw : CountMode::adjusted;

  const fs::path out_dir = f.out;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string());

  auto manifest = manifest_base("analyze", started);
  auto options = to_json(opts);
  options["input"] = f.input;
  options["label"] = f.label;
  options["baseline"] = f.baseline ? nlohmann::json(*f.baseline) : nlohmann::json(nullptr);
  options["dump_corr"] = f.dump_corr;
  options["diagnostics"] = f.diagnostics;
  manifest["options"] = options;
  manifest["seed"] = nullptr;
  manifest["threads"] = resolve_threads(opts.threads);

  try {
    if (!fs::exists(f.input)) throw IoError("input file not found: " + f.input);
    manifest["input_sha256"] = sha256_file(f.input);
    const Dataset data = load_dataset(f.input, f.label, f.baseline);
    const AnalysisResult result = run_analysis(data, opts);
    const auto files = write_analysis(result, out_dir, {f.dump_corr, f.diagnostics});
    manifest["status"] = "ok";
    manifest["outputs"] = files;
    manifest["n"] = result.dataset.n();
    manifest["p"] = result.dataset.p();
    manifest["q"] = result.dataset.q;
    manifest["failed_fits"] = result.failed_fits;
    write_manifest(out_dir, manifest);
    for (const auto& cr : result.categories) {
      std::cerr << "category " << cr.label << " vs " << result.baseline_label << ": k = " << cr.pfa.model.k
                << ", t_alpha = " << (cr.pfa.report.t_alpha ? format_real(*cr.pfa.report.t_alpha) : "none") << '\n';
    }
  } catch (const std::exception& e) {
    manifest["status"] = "failed";
    manifest["error"] = e.what();
    try {
      write_manifest(out_dir, manifest);
    } catch (const std::exception&) {
    }
    throw;
  }
  return kExitOk;
}

int run_simulate(SimulateFlags& f) {
  const std::string started = utc_timestamp();
  SimConfig& cfg = f.cfg;
  cfg.count = f.count_raw ? CountMode::raw : CountMode::adjusted;
  cfg.validate();

  const fs::path out_dir = f.out;
  std::error_code ec;
  fs::create_directories(out_dir, ec);
  if (ec) throw IoError("cannot create output directory " + out_dir.string());

  auto manifest = manifest_base("simulate", started);
  manifest["options"] = to_json(cfg);
  manifest["seed"] = cfg.seed;
  manifest["threads"] = resolve_threads(f.threads);
  manifest["rng"] = "mt19937_64 + splitmix64 stream derivation + Marsaglia polar normals, stream format 1";

  const MonteCarloResult result = run_monte_carlo(cfg, resolve_threads(f.threads));
  atomic_write(out_dir / "summary.csv", summary_csv(result.summary, cfg));
  atomic_write(out_dir / "records.csv", records_csv(result.records));
  manifest["status"] = "ok";
  manifest["outputs"] = {"summary.csv", "records.csv"};
  write_manifest(out_dir, manifest);
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Multiple testing of feature associations with a nominal response under dependence"};
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(MULTIPFA_VERSION));

  AnalyzeFlags af;
  auto* analyze = app.add_subcommand("analyze", "Analyze a feature matrix CSV with a categorical label column");
  analyze->add_option("--input", af.input, "CSV file with a header row")->required();
  analyze->add_option("--label", af.label, "Name of the label column")->required();
  analyze->add_option("--baseline", af.baseline, "Label value used as baseline (default: last category)");
  analyze->add_option("--k", af.k, "Factor count, or 'auto' for the eigenvalue-share rule")->capture_default_str();
  analyze->add_option("--factor-reg", af.factor_reg, "Factor regression")
      ->check(CLI::IsMember({"l1", "l2"}))
      ->capture_default_str();
  analyze->add_option("--alpha", af.opts.alpha, "Target FDP level")->capture_default_str();
  analyze->add_option("--grid-min", af.opts.grid_min)->capture_default_str();
  analyze->add_option("--grid-max", af.opts.grid_max)->capture_default_str();
  analyze->add_option("--grid-points", af.opts.grid_points)->capture_default_str();
  analyze->add_option("--trim", af.opts.trim, "Fraction of smallest |Z| used by the L2 factor fit")
      ->capture_default_str();
  analyze->add_flag("--count-raw", af.count_raw, "Count rejections R(t) on raw instead of adjusted p-values");
  analyze->add_flag("--tic", af.opts.tic, "Apply total-ion-count normalization first");
  analyze->add_option("--max-iter", af.opts.fit.max_iter)->capture_default_str();
  analyze->add_option("--grad-tol", af.opts.fit.grad_tol)->capture_default_str();
  analyze->add_option("--sep-bound", af.opts.fit.separation_bound)->capture_default_str();
  analyze->add_flag("--diagnostics", af.diagnostics, "Write per-feature fit diagnostics (JSON lines)");
  analyze->add_flag("--dump-corr", af.dump_corr, "Write the estimated correlation matrices");
  analyze->add_option("--threads", af.opts.threads, "Worker threads (default: MULTIPFA_THREADS or all cores)");
  analyze->add_option("--out", af.out, "Output directory")->required();

  SimulateFlags sf;
  sf.cfg.reps = 200;
  auto* simulate = app.add_subcommand("simulate", "Monte Carlo study under the equi-correlation design");
  std::string config_path;
  simulate->add_option("--config", config_path, "key = value file; explicit flags override it");
  simulate->add_option("--scenario", sf.cfg.scenario)->check(CLI::IsMember({1, 2}))->capture_default_str();
  simulate->add_option("--n", sf.cfg.n)->capture_default_str();
  simulate->add_option("--p", sf.cfg.p)->capture_default_str();
  simulate->add_option("--p1", sf.cfg.p1)->capture_default_str();
  simulate->add_option("--rho", sf.cfg.rho)->capture_default_str();
  simulate->add_option("--beta", sf.cfg.beta_active, "Slope of every active feature")->capture_default_str();
  simulate->add_option("--k", sf.cfg.k)->capture_default_str();
  simulate->add_option("--t", sf.cfg.t_fixed, "Fixed reporting threshold")->capture_default_str();
  simulate->add_option("--alpha", sf.cfg.alpha)->capture_default_str();
  simulate->add_option("--reps", sf.cfg.reps)->capture_default_str();
  simulate->add_option("--seed", sf.cfg.seed)->capture_default_str();
  simulate->add_option("--trim", sf.cfg.trim)->capture_default_str();
  simulate->add_option("--grid-min", sf.cfg.grid_min)->capture_default_str();
  simulate->add_option("--grid-max", sf.cfg.grid_max)->capture_default_str();
  simulate->add_option("--grid-points", sf.cfg.grid_points)->capture_default_str();
  simulate->add_option("--bootstrap", sf.cfg.bootstrap_resamples, "Bootstrap resamples for the median's SE")
      ->capture_default_str();
  simulate->add_option("--max-iter", sf.cfg.fit.max_iter)->capture_default_str();
  simulate->add_option("--grad-tol", sf.cfg.fit.grad_tol)->capture_default_str();
  simulate->add_option("--sep-bound", sf.cfg.fit.separation_bound)->capture_default_str();
  simulate->add_flag("--count-raw", sf.count_raw);
  simulate->add_option("--threads", sf.threads);
  simulate->add_option("--out", sf.out, "Output directory")->required();

  // Splice config-file tokens in front of the simulate flags.
  std::vector<std::string> args(argv + 1, argv + argc);
  try {
    for (std::size_t i = 0; i + 1 < args.size(); ++i) {
      if (args[i] == "--config") {
        const auto tokens = config_tokens(args[i + 1]);
        const auto sub = std::find(args.begin(), args.end(), "simulate");
        if (sub != args.end()) args.insert(sub + 1, tokens.begin(), tokens.end());
        break;
      }
    }
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  }
  std::reverse(args.begin(), args.end());

  try {
    app.parse(args);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return kExitInvalid;
  }

  try {
    if (*analyze) return run_analyze(af);
    return run_simulate(sf);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const IoError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitIo;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kExitInvalid;
  } catch (const std::exception& e) {
    std::cerr << "internal error: " << e.what() << '\n';
    return kExitInternal;
  }
}
