#pragma once

#include <cstddef>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <nlohmann/json.hpp>

namespace multipfa {

/// Feature matrix (rows = observational units, columns = features) with a
/// nominal response coded 1..q.
struct Dataset {
  Eigen::MatrixXd features;
  std::vector<int> response;
  int q = 0;
  std::vector<std::string> feature_names;
  /// category_labels[c - 1] is the original label of code c.
  std::vector<std::string> category_labels;
  int baseline = 0;

  Eigen::Index n() const { return features.rows(); }
  Eigen::Index p() const { return features.cols(); }

  bool operator==(const Dataset& other) const;
};

/// Builds a Dataset from in-memory parts. Only shapes are checked here; use
/// validate() or require_valid() for the data invariants. Missing names
/// default to "x1".."xp", labels to "1".."q", baseline to q.
Dataset make_dataset(Eigen::MatrixXd features, std::vector<int> response, int q,
                     std::vector<std::string> feature_names = {},
                     std::vector<std::string> category_labels = {},
                     std::optional<int> baseline = std::nullopt);

/// Reads a CSV with a header row. One column (label_column) holds the
/// response; every other column must parse as a finite real. If every label
/// is a positive integer the integers are used as codes (q = max label);
/// otherwise codes follow first appearance. `baseline` names a label value.
Dataset load_dataset(const std::filesystem::path& path, const std::string& label_column,
                     const std::optional<std::string>& baseline = std::nullopt);

/// Writes the dataset in the format load_dataset reads; the label column is
/// appended last. Values use shortest round-trip formatting.
void write_dataset_csv(const Dataset& d, const std::filesystem::path& path,
                       const std::string& label_column = "label");

/// Divides every row by its total ion count (row sum). Throws
/// ValidationError on a negative entry or a row summing to zero.
Dataset tic_normalize(const Dataset& d);

struct ValidationFailure {
  std::string invariant;
  std::string detail;
};

struct ValidationReport {
  std::vector<ValidationFailure> failures;
  /// category_counts[c - 1] = number of units with response code c.
  std::vector<std::size_t> category_counts;
  std::vector<Eigen::Index> constant_columns;
  /// (row, column) of every non-finite feature entry.
  std::vector<std::pair<Eigen::Index, Eigen::Index>> nonfinite_cells;

  bool ok() const { return failures.empty(); }
};

ValidationReport validate(const Dataset& d);

/// Throws ValidationError carrying the first failure when validate() fails.
void require_valid(const Dataset& d);

nlohmann::json to_json(const ValidationReport& report);

}  // namespace multipfa
