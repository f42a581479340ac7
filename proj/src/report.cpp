#include "multipfa/report.hpp"

#include <array>
#include <charconv>
#include <chrono>
#include <cmath>
#include <ctime>
#include <fstream>
#include <iomanip>
#include <sstream>
#include <system_error>

#include <openssl/evp.h>
#include <unistd.h>

#include "multipfa/error.hpp"

namespace multipfa {

namespace {

std::string na_or(double v) { return std::isfinite(v) ? format_real(v) : "NA"; }

}  // namespace

std::string format_real(double v) {
  if (std::isnan(v)) return "nan";
  std::array<char, 64> buf{};
  const auto [ptr, ec] = std::to_chars(buf.data(), buf.data() + buf.size(), v);
  return std::string(buf.data(), ec == std::errc() ? ptr : buf.data());
}

void atomic_write(const std::filesystem::path& path, std::string_view content) {
  auto tmp = path;
  tmp += ".tmp." + std::to_string(::getpid());
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open " + tmp.string() + " for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) {
      std::error_code ignore;
      std::filesystem::remove(tmp, ignore);
      throw IoError("failed writing " + tmp.string());
    }
  }
  std::error_code ec;
  std::filesystem::rename(tmp, path, ec);
  if (ec) {
    std::error_code ignore;
    std::filesystem::remove(tmp, ignore);
    throw IoError("cannot rename " + tmp.string() + " to " + path.string() + ": " + ec.message());
  }
}

std::string sha256_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  EVP_MD_CTX* ctx = EVP_MD_CTX_new();
  EVP_DigestInit_ex(ctx, EVP_sha256(), nullptr);
  std::array<char, 1 << 16> buf{};
  while (in) {
    in.read(buf.data(), buf.size());
    EVP_DigestUpdate(ctx, buf.data(), static_cast<std::size_t>(in.gcount()));
  }
  std::array<unsigned char, EVP_MAX_MD_SIZE> md{};
  unsigned len = 0;
  EVP_DigestFinal_ex(ctx, md.data(), &len);
  EVP_MD_CTX_free(ctx);
  std::ostringstream hex;
  for (unsigned i = 0; i < len; ++i) hex << std::hex << std::setw(2) << std::setfill('0') << static_cast<int>(md[i]);
  return hex.str();
}

std::string utc_timestamp() {
  const auto now = std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  std::ostringstream out;
  out << std::put_time(&tm, "%Y-%m-%dT%H:%M:%SZ");
  return out.str();
}

std::string features_csv(const CategoryInference& ci, const std::vector<std::string>& names,
                         const Eigen::VectorXd* p_adjusted) {
  std::ostringstream out;
  out << "feature,beta_hat,se,z,p_raw";
  if (p_adjusted) out << ",p_adjusted";
  out << '\n';
  std::vector<Eigen::Index> slot(names.size(), -1);
  for (Eigen::Index k = 0; k < ci.active_count(); ++k) slot[static_cast<std::size_t>(ci.active_index[static_cast<std::size_t>(k)])] = k;
  for (std::size_t j = 0; j < names.size(); ++j) {
    out << names[j];
    const Eigen::Index k = slot[j];
    if (k < 0) {
      out << ",NA,NA,NA,NA" << (p_adjusted ? ",NA" : "") << '\n';
      continue;
    }
    out << ',' << na_or(ci.beta_hat[k]) << ',' << na_or(ci.se(k)) << ',' << na_or(ci.z[k]) << ','
        << format_real(ci.p_raw[k]);
    if (p_adjusted) out << ',' << format_real((*p_adjusted)[k]);
    out << '\n';
  }
  return out.str();
}

std::string fdp_csv(const FdpReport& report) {
  std::ostringstream out;
  out << "t,R,V_hat,FDP_hat\n";
  for (std::size_t i = 0; i < report.grid.size(); ++i)
    out << format_real(report.grid[i]) << ',' << report.r[i] << ',' << format_real(report.v_hat[i]) << ','
        << format_real(report.fdp_hat[i]) << '\n';
  return out.str();
}

std::string corr_csv(const CategoryInference& ci, const std::vector<std::string>& names) {
  std::ostringstream out;
  for (Eigen::Index k = 0; k < ci.active_count(); ++k)
    out << (k ? "," : "") << names[static_cast<std::size_t>(ci.active_index[static_cast<std::size_t>(k)])];
  out << '\n';
  for (Eigen::Index i = 0; i < ci.corr_hat.rows(); ++i) {
    for (Eigen::Index j = 0; j < ci.corr_hat.cols(); ++j) out << (j ? "," : "") << format_real(ci.corr_hat(i, j));
    out << '\n';
  }
  return out.str();
}

nlohmann::json pfa_summary_json(const PfaResult& pfa, int eigen_head) {
  const auto& m = pfa.model;
  std::vector<double> head;
  for (Eigen::Index h = 0; h < std::min<Eigen::Index>(eigen_head, m.spectrum.eigenvalues.size()); ++h)
    head.push_back(m.spectrum.eigenvalues[h]);
  nlohmann::json j = {
      {"t_alpha", pfa.report.t_alpha ? nlohmann::json(*pfa.report.t_alpha) : nlohmann::json(nullptr)},
      {"alpha", pfa.report.alpha},
      {"k", m.k},
      {"estimator", to_string(m.regression)},
      {"pvalue_kind", to_string(pfa.report.pvalue_kind)},
      {"eigenvalues_head", head},
      {"eigenvalue_sum", m.spectrum.eigenvalues.sum()},
      {"eigenvalue_clamp_count", m.spectrum.clamped_count},
      {"eigenvalue_clamp_magnitude", m.spectrum.clamped_magnitude},
      {"loading_clamp_count", m.loadings.clamp_count},
      {"factor_estimate", std::vector<double>(m.factors.w.begin(), m.factors.w.end())},
      {"factor_degenerate", m.factors.degenerate},
      {"factor_converged", m.factors.converged},
      {"factor_iterations", m.factors.iterations},
  };
  if (pfa.report.t_alpha_index) {
    const auto i = *pfa.report.t_alpha_index;
    j["R_t_alpha"] = pfa.report.r[i];
    j["FDP_hat_t_alpha"] = pfa.report.fdp_hat[i];
  }
  return j;
}

std::string summary_csv(const SummaryTable& table, const SimConfig& cfg) {
  std::ostringstream out;
  out << "c";
  if (cfg.scenario == 2) out << ",rho";
  out << ",median_FDP_hat,se_FDP_hat,mean_R,se_R,mean_S,se_S,median_t_alpha,mean_S_t_alpha\n";
  for (const auto& row : table.rows) {
    out << row.category;
    if (cfg.scenario == 2) out << ',' << format_real(cfg.rho);
    out << ',' << format_real(row.median_fdp) << ',' << format_real(row.se_fdp) << ',' << format_real(row.mean_r)
        << ',' << format_real(row.se_r) << ',' << format_real(row.mean_s) << ',' << format_real(row.se_s) << ','
        << na_or(row.median_t_alpha) << ',' << na_or(row.mean_s_t_alpha) << '\n';
  }
  return out.str();
}

std::string records_csv(const std::vector<RepRecord>& records) {
  std::ostringstream out;
  out << "rep,c,k,failed_fits,FDP_hat_t,R_t,V_t,S_t,t_alpha,S_t_alpha\n";
  for (const auto& r : records)
    out << r.rep << ',' << r.category << ',' << r.k << ',' << r.failed_fits << ',' << format_real(r.fdp_t) << ','
        << r.r_t << ',' << r.v_t << ',' << r.s_t << ',' << (r.t_alpha ? format_real(*r.t_alpha) : "NA") << ','
        << r.s_t_alpha << '\n';
  return out.str();
}

nlohmann::json to_json(const SimConfig& cfg) {
  return {{"scenario", cfg.scenario},
          {"n", cfg.n},
          {"p", cfg.p},
          {"p1", cfg.p1},
          {"rho", cfg.rho},
          {"beta_active", cfg.beta_active},
          {"k", cfg.k},
          {"t_fixed", cfg.t_fixed},
          {"alpha", cfg.alpha},
          {"reps", cfg.reps},
          {"seed", cfg.seed},
          {"count", to_string(cfg.count)},
          {"trim", cfg.trim},
          {"grid_min", cfg.grid_min},
          {"grid_max", cfg.grid_max},
          {"grid_points", cfg.grid_points},
          {"bootstrap_resamples", cfg.bootstrap_resamples},
          {"max_iter", cfg.fit.max_iter},
          {"grad_tol", cfg.fit.grad_tol},
          {"sep_bound", cfg.fit.separation_bound},
          {"factor_regression", "l2"}};
}

}  // namespace multipfa
