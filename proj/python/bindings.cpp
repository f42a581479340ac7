#include <optional>
#include <string>
#include <vector>

#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "multipfa/analyze.hpp"
#include "multipfa/data.hpp"
#include "multipfa/error.hpp"
#include "multipfa/mmm.hpp"
#include "multipfa/multinomial.hpp"
#include "multipfa/pfa.hpp"
#include "multipfa/simulate.hpp"

namespace py = pybind11;
using namespace multipfa;

namespace {

KPolicy k_policy(const py::object& k) {
  if (k.is_none() || (py::isinstance<py::str>(k) && k.cast<std::string>() == "auto")) return ThresholdK{0.01};
  return ExplicitK{k.cast<int>()};
}

FactorRegression regression(const std::string& name) {
  if (name == "l1") return FactorRegression::l1;
  if (name == "l2") return FactorRegression::l2;
  throw ValidationError("factor_reg must be 'l1' or 'l2'");
}

py::dict report_dict(const FdpReport& r) {
  py::dict d;
  d["t"] = r.grid;
  d["R"] = r.r;
  d["V_hat"] = r.v_hat;
  d["FDP_hat"] = r.fdp_hat;
  d["t_alpha"] = r.t_alpha ? py::cast(*r.t_alpha) : py::none();
  return d;
}

py::dict pfa_dict(const PfaResult& res) {
  py::dict d;
  d["k"] = res.model.k;
  d["eigenvalues"] = res.model.spectrum.eigenvalues;
  d["eta_hat"] = res.model.eta_hat;
  d["a"] = res.model.loadings.a;
  d["w"] = res.model.factors.w;
  d["p_adjusted"] = res.p_adjusted;
  d["fdp"] = report_dict(res.report);
  d["t_alpha"] = res.report.t_alpha ? py::cast(*res.report.t_alpha) : py::none();
  return d;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Multinomial marginal regression with principal factor approximation";
  m.attr("__version__") = MULTIPFA_VERSION;

  py::register_exception<ValidationError>(m, "ValidationError", PyExc_ValueError);
  py::register_exception<IoError>(m, "IoError", PyExc_OSError);

  m.def(
      "load_dataset",
      [](const std::string& path, const std::string& label, std::optional<std::string> baseline) {
        const Dataset d = load_dataset(path, label, baseline);
        py::dict out;
        out["features"] = d.features;
        out["response"] = d.response;
        out["q"] = d.q;
        out["feature_names"] = d.feature_names;
        out["category_labels"] = d.category_labels;
        out["baseline"] = d.baseline;
        return out;
      },
      py::arg("path"), py::arg("label"), py::arg("baseline") = py::none());

  m.def(
      "fit_marginal",
      [](const std::vector<double>& x, const std::vector<int>& y, int q, int max_iter, double grad_tol) {
        FitOptions opts;
        opts.max_iter = max_iter;
        opts.grad_tol = grad_tol;
        const MarginalFit fit = fit_marginal(x, y, q, opts);
        py::dict out;
        out["alpha"] = fit.params.alpha;
        out["beta"] = fit.params.beta;
        out["status"] = std::string(to_string(fit.status));
        out["converged"] = fit.converged;
        out["iterations"] = fit.iterations;
        out["grad_norm"] = fit.grad_norm;
        out["log_likelihood"] = fit.log_likelihood;
        out["fisher"] = fit.fisher;
        out["influence"] = fit.influence;
        return out;
      },
      py::arg("x"), py::arg("y"), py::arg("q"), py::arg("max_iter") = 100, py::arg("grad_tol") = 1e-8,
      "Baseline-category logit fit of one feature; y is coded 1..q with q the baseline.");

  m.def(
      "pfa",
      [](const Eigen::VectorXd& z, const Eigen::MatrixXd& corr, py::object k, const std::string& factor_reg,
         double alpha, double trim) {
        PfaOptions opts;
        opts.k = k_policy(k);
        opts.regression = regression(factor_reg);
        opts.alpha = alpha;
        opts.trim = trim;
        opts.count = CountMode::adjusted;
        const Eigen::VectorXd p_raw = raw_pvalues(z);
        return pfa_dict(run_pfa(z, corr, p_raw, opts));
      },
      py::arg("z"), py::arg("corr"), py::arg("k") = py::none(), py::arg("factor_reg") = "l1",
      py::arg("alpha") = 0.05, py::arg("trim") = 0.95);

  m.def(
      "analyze",
      [](const Eigen::MatrixXd& features, const std::vector<int>& response, int q, std::optional<int> baseline,
         py::object k, const std::string& factor_reg, double alpha, bool count_raw, unsigned threads) {
        AnalyzeOptions opts;
        opts.k = k_policy(k);
        opts.regression = regression(factor_reg);
        opts.alpha = alpha;
        opts.count = count_raw ? CountMode::raw : CountMode::adjusted;
        opts.threads = threads;
        AnalysisResult res;
        {
          py::gil_scoped_release release;
          res = run_analysis(make_dataset(features, response, q, {}, {}, baseline), opts);
        }
        py::list cats;
        for (const auto& cr : res.categories) {
          py::dict d = pfa_dict(cr.pfa);
          d["category"] = cr.code;
          std::vector<Eigen::Index> idx(cr.inference.active_index.begin(), cr.inference.active_index.end());
          d["active_index"] = idx;
          d["beta_hat"] = cr.inference.beta_hat;
          d["z"] = cr.inference.z;
          d["p_raw"] = cr.inference.p_raw;
          cats.append(d);
        }
        py::dict out;
        out["categories"] = cats;
        out["failed_fits"] = res.failed_fits;
        return out;
      },
      py::arg("features"), py::arg("response"), py::arg("q"), py::arg("baseline") = py::none(),
      py::arg("k") = py::none(), py::arg("factor_reg") = "l1", py::arg("alpha") = 0.05,
      py::arg("count_raw") = false, py::arg("threads") = 0);

  m.def(
      "simulate",
      [](int scenario, int n, int p, int p1, double rho, double beta, int k, double t, int reps,
         std::uint64_t seed, unsigned threads) {
        SimConfig cfg;
        cfg.scenario = scenario;
        cfg.n = n;
        cfg.p = p;
        cfg.p1 = p1;
        cfg.rho = rho;
        cfg.beta_active = beta;
        cfg.k = k;
        cfg.t_fixed = t;
        cfg.reps = reps;
        cfg.seed = seed;
        MonteCarloResult res;
        {
          py::gil_scoped_release release;
          res = run_monte_carlo(cfg, threads);
        }
        py::list rows;
        for (const auto& r : res.summary.rows) {
          py::dict d;
          d["c"] = r.category;
          d["median_FDP_hat"] = r.median_fdp;
          d["se_FDP_hat"] = r.se_fdp;
          d["mean_R"] = r.mean_r;
          d["se_R"] = r.se_r;
          d["mean_S"] = r.mean_s;
          d["se_S"] = r.se_s;
          rows.append(d);
        }
        return rows;
      },
      py::arg("scenario") = 1, py::arg("n") = 500, py::arg("p") = 500, py::arg("p1") = 10, py::arg("rho") = 0.0,
      py::arg("beta") = 1.0, py::arg("k") = 10, py::arg("t") = 1e-4, py::arg("reps") = 10, py::arg("seed") = 1,
      py::arg("threads") = 1);
}
