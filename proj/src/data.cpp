#include "multipfa/data.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "multipfa/error.hpp"
#include "multipfa/report.hpp"

namespace multipfa {

namespace {

std::string trim(std::string_view s) {
  const auto first = s.find_first_not_of(" \t\r\n");
  if (first == std::string_view::npos) return {};
  const auto last = s.find_last_not_of(" \t\r\n");
  return std::string(s.substr(first, last - first + 1));
}

// Splits one CSV record. Double-quoted fields may contain commas; a doubled
// quote inside a quoted field is a literal quote.
std::vector<std::string> split_record(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  bool quoted = false;
  for (std::size_t i = 0; i < line.size(); ++i) {
    const char ch = line[i];
    if (quoted) {
      if (ch == '"') {
        if (i + 1 < line.size() && line[i + 1] == '"') {
          cur.push_back('"');
          ++i;
        } else {
          quoted = false;
        }
      } else {
        cur.push_back(ch);
      }
    } else if (ch == '"') {
      quoted = true;
    } else if (ch == ',') {
      out.push_back(trim(cur));
      cur.clear();
    } else {
      cur.push_back(ch);
    }
  }
  out.push_back(trim(cur));
  return out;
}

std::optional<double> parse_real(const std::string& s) {
  double v = 0.0;
  const char* first = s.data();
  const char* last = s.data() + s.size();
  if (first != last && *first == '+') ++first;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last) return std::nullopt;
  return v;
}

std::optional<long> parse_positive_int(const std::string& s) {
  long v = 0;
  const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc() || ptr != s.data() + s.size() || v < 1) return std::nullopt;
  return v;
}

std::string quote_if_needed(const std::string& s) {
  if (s.find_first_of(",\"") == std::string::npos) return s;
  std::string out = "\"";
  for (char ch : s) {
    if (ch == '"') out.push_back('"');
    out.push_back(ch);
  }
  out.push_back('"');
  return out;
}

}  // namespace

bool Dataset::operator==(const Dataset& other) const {
  return q == other.q && baseline == other.baseline && response == other.response &&
         feature_names == other.feature_names && category_labels == other.category_labels &&
         features.rows() == other.features.rows() && features.cols() == other.features.cols() &&
         features == other.features;
}

Dataset make_dataset(Eigen::MatrixXd features, std::vector<int> response, int q,
                     std::vector<std::string> feature_names,
                     std::vector<std::string> category_labels, std::optional<int> baseline) {
  if (static_cast<Eigen::Index>(response.size()) != features.rows())
    throw ValidationError("response length " + std::to_string(response.size()) +
                          " does not match " + std::to_string(features.rows()) + " feature rows");
  if (feature_names.empty()) {
    for (Eigen::Index j = 0; j < features.cols(); ++j)
      feature_names.push_back("x" + std::to_string(j + 1));
  }
  if (static_cast<Eigen::Index>(feature_names.size()) != features.cols())
    throw ValidationError("feature_names has " + std::to_string(feature_names.size()) +
                          " entries for " + std::to_string(features.cols()) + " columns");
  if (category_labels.empty()) {
    for (int c = 1; c <= q; ++c) category_labels.push_back(std::to_string(c));
  }
  if (static_cast<int>(category_labels.size()) != q)
    throw ValidationError("category_labels must have q entries");
  const int base = baseline.value_or(q);
  if (q >= 1 && (base < 1 || base > q))
    throw ValidationError("baseline " + std::to_string(base) + " outside 1.." + std::to_string(q));

  Dataset d;
  d.features = std::move(features);
  d.response = std::move(response);
  d.q = q;
  d.feature_names = std::move(feature_names);
  d.category_labels = std::move(category_labels);
  d.baseline = base;
  return d;
}

Dataset load_dataset(const std::filesystem::path& path, const std::string& label_column,
                     const std::optional<std::string>& baseline) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open " + path.string());

  std::string line;
  if (!std::getline(in, line)) throw ValidationError(path.string() + ": empty file, header row required");
  if (line.size() >= 3 && static_cast<unsigned char>(line[0]) == 0xEF) line.erase(0, 3);  // BOM
  const auto header = split_record(line);

  Eigen::Index label_idx = -1;
  for (std::size_t i = 0; i < header.size(); ++i) {
    if (header[i] == label_column) {
      if (label_idx >= 0) throw ValidationError("label column '" + label_column + "' appears more than once");
      label_idx = static_cast<Eigen::Index>(i);
    }
  }
  if (label_idx < 0) throw ValidationError("label column '" + label_column + "' not found in header");

  std::vector<std::string> names;
  for (std::size_t i = 0; i < header.size(); ++i)
    if (static_cast<Eigen::Index>(i) != label_idx) names.push_back(header[i]);

  std::vector<double> values;  // row-major while reading
  std::vector<std::string> labels;
  std::size_t row = 0;
  while (std::getline(in, line)) {
    if (trim(line).empty()) continue;
    ++row;
    const auto fields = split_record(line);
    if (fields.size() != header.size())
      throw ValidationError("row " + std::to_string(row) + ": expected " + std::to_string(header.size()) +
                            " fields, found " + std::to_string(fields.size()));
    for (std::size_t i = 0; i < fields.size(); ++i) {
      if (static_cast<Eigen::Index>(i) == label_idx) {
        labels.push_back(fields[i]);
        continue;
      }
      const auto v = parse_real(fields[i]);
      if (!v || !std::isfinite(*v))
        throw ValidationError("row " + std::to_string(row) + ", column '" + header[i] +
                              "': non-numeric or non-finite value '" + fields[i] + "'");
      values.push_back(*v);
    }
  }

  const auto n = static_cast<Eigen::Index>(labels.size());
  const auto p = static_cast<Eigen::Index>(names.size());
  Eigen::MatrixXd x(n, p);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < p; ++j) x(i, j) = values[static_cast<std::size_t>(i * p + j)];

  // Integer labels are taken as codes; anything else is coded by first appearance.
  bool integer_codes = !labels.empty();
  long max_code = 0;
  for (const auto& l : labels) {
    const auto v = parse_positive_int(l);
    if (!v) {
      integer_codes = false;
      break;
    }
    max_code = std::max(max_code, *v);
  }

  std::vector<int> codes;
  std::vector<std::string> category_labels;
  if (integer_codes) {
    const int q = static_cast<int>(max_code);
    std::vector<std::size_t> counts(static_cast<std::size_t>(q), 0);
    for (const auto& l : labels) {
      const int c = static_cast<int>(*parse_positive_int(l));
      codes.push_back(c);
      ++counts[static_cast<std::size_t>(c - 1)];
    }
    for (int c = 1; c <= q; ++c) {
      if (counts[static_cast<std::size_t>(c - 1)] == 0)
        throw ValidationError("category " + std::to_string(c) + " has zero occurrences");
      category_labels.push_back(std::to_string(c));
    }
  } else {
    std::unordered_map<std::string, int> seen;
    for (const auto& l : labels) {
      auto it = seen.find(l);
      if (it == seen.end()) {
        category_labels.push_back(l);
        it = seen.emplace(l, static_cast<int>(category_labels.size())).first;
      }
      codes.push_back(it->second);
    }
  }
  const int q = static_cast<int>(category_labels.size());
  if (q < 2) throw ValidationError("q < 2: label column '" + label_column + "' has fewer than two categories");

  int base = q;
  if (baseline) {
    const auto it = std::find(category_labels.begin(), category_labels.end(), *baseline);
    if (it == category_labels.end()) throw ValidationError("baseline '" + *baseline + "' is not a label value");
    base = static_cast<int>(it - category_labels.begin()) + 1;
  }

  Dataset d = make_dataset(std::move(x), std::move(codes), q, std::move(names), std::move(category_labels), base);
  require_valid(d);
  return d;
}

void write_dataset_csv(const Dataset& d, const std::filesystem::path& path, const std::string& label_column) {
  std::ostringstream out;
  for (const auto& name : d.feature_names) out << quote_if_needed(name) << ',';
  out << quote_if_needed(label_column) << '\n';
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    for (Eigen::Index j = 0; j < d.p(); ++j) out << format_real(d.features(i, j)) << ',';
    out << quote_if_needed(d.category_labels[static_cast<std::size_t>(d.response[static_cast<std::size_t>(i)] - 1)])
        << '\n';
  }
  atomic_write(path, out.str());
}

Dataset tic_normalize(const Dataset& d) {
  Dataset out = d;
  for (Eigen::Index i = 0; i < d.n(); ++i) {
    double total = 0.0;
    for (Eigen::Index j = 0; j < d.p(); ++j) {
      const double v = d.features(i, j);
      if (!(v >= 0.0))
        throw ValidationError("tic_normalize: negative or non-finite entry at row " + std::to_string(i) +
                              ", column " + std::to_string(j));
      total += v;
    }
    if (!(total > 0.0)) throw ValidationError("tic_normalize: row " + std::to_string(i) + " sums to zero");
    out.features.row(i) = d.features.row(i) / total;
  }
  return out;
}

ValidationReport validate(const Dataset& d) {
  ValidationReport r;
  const auto fail = [&r](std::string inv, std::string detail) {
    r.failures.push_back({std::move(inv), std::move(detail)});
  };

  for (Eigen::Index j = 0; j < d.p(); ++j) {
    bool finite_col = true;
    for (Eigen::Index i = 0; i < d.n(); ++i) {
      if (!std::isfinite(d.features(i, j))) {
        r.nonfinite_cells.emplace_back(i, j);
        fail("finite_features", "non-finite value at row " + std::to_string(i) + ", column " + std::to_string(j));
        finite_col = false;
      }
    }
    if (finite_col && d.n() > 0 && (d.features.col(j).array() == d.features(0, j)).all())
      r.constant_columns.push_back(j);
  }

  r.category_counts.assign(static_cast<std::size_t>(std::max(d.q, 0)), 0);
  for (std::size_t i = 0; i < d.response.size(); ++i) {
    const int c = d.response[i];
    if (c < 1 || c > d.q) {
      fail("response_codes", "response at row " + std::to_string(i) + " is " + std::to_string(c) +
                                 ", outside 1.." + std::to_string(d.q));
    } else {
      ++r.category_counts[static_cast<std::size_t>(c - 1)];
    }
  }
  if (static_cast<Eigen::Index>(d.response.size()) != d.n())
    fail("response_length", "response has " + std::to_string(d.response.size()) + " entries for " +
                                std::to_string(d.n()) + " rows");
  if (d.q < 2) fail("category_count", "q < 2");
  for (std::size_t c = 0; c < r.category_counts.size(); ++c)
    if (r.category_counts[c] == 0) fail("category_present", "category " + std::to_string(c + 1) + " has zero occurrences");
  if (d.n() < d.q + 2)
    fail("sample_size", "n = " + std::to_string(d.n()) + " < q + 2 = " + std::to_string(d.q + 2));
  if (static_cast<Eigen::Index>(d.feature_names.size()) != d.p()) {
    fail("feature_names", "expected " + std::to_string(d.p()) + " names, found " +
                              std::to_string(d.feature_names.size()));
  } else {
    std::set<std::string> distinct(d.feature_names.begin(), d.feature_names.end());
    if (static_cast<Eigen::Index>(distinct.size()) != d.p()) fail("feature_names", "feature names are not distinct");
  }
  if (d.baseline < 1 || d.baseline > d.q)
    fail("baseline", "baseline " + std::to_string(d.baseline) + " outside 1.." + std::to_string(d.q));
  return r;
}

void require_valid(const Dataset& d) {
  const auto report = validate(d);
  if (!report.ok())
    throw ValidationError(report.failures.front().invariant + ": " + report.failures.front().detail);
}

nlohmann::json to_json(const ValidationReport& report) {
  nlohmann::json failures = nlohmann::json::array();
  for (const auto& f : report.failures) failures.push_back({{"invariant", f.invariant}, {"detail", f.detail}});
  nlohmann::json cells = nlohmann::json::array();
  for (const auto& [i, j] : report.nonfinite_cells) cells.push_back({i, j});
  return {{"failures", failures},
          {"category_counts", report.category_counts},
          {"constant_columns", report.constant_columns},
          {"nonfinite_cells", cells}};
}

}  // namespace multipfa
