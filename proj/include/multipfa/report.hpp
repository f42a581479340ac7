#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

#include "multipfa/mmm.hpp"
#include "multipfa/pfa.hpp"
#include "multipfa/simulate.hpp"

namespace multipfa {

/// Shortest representation that parses back to the same double.
std::string format_real(double v);

/// Writes `content` to a sibling temporary file and renames it over `path`,
/// so readers see either the old file, the complete new file, or nothing.
/// Throws IoError.
void atomic_write(const std::filesystem::path& path, std::string_view content);

/// Hex SHA-256 of a file's bytes. Throws IoError.
std::string sha256_file(const std::filesystem::path& path);

/// ISO-8601 UTC timestamp, second resolution.
std::string utc_timestamp();

/// Per-feature table for one category: feature, beta_hat, se, z, p_raw and,
/// when given, p_adjusted. Masked features appear with NA fields.
std::string features_csv(const CategoryInference& ci, const std::vector<std::string>& names,
                         const Eigen::VectorXd* p_adjusted = nullptr);

/// Columns t, R, V_hat, FDP_hat.
std::string fdp_csv(const FdpReport& report);

/// Correlation matrix with a header of the active feature names.
std::string corr_csv(const CategoryInference& ci, const std::vector<std::string>& names);

nlohmann::json pfa_summary_json(const PfaResult& pfa, int eigen_head = 10);

std::string summary_csv(const SummaryTable& table, const SimConfig& cfg);
std::string records_csv(const std::vector<RepRecord>& records);

nlohmann::json to_json(const SimConfig& cfg);

}  // namespace multipfa
