#pragma once

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simlab/classifiers.hpp"
#include "simlab/estimators.hpp"

namespace simlab {

/// Header plus rows of raw fields.
struct CsvTable {
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

/// RFC-4180 reader: comma separated, double-quoted fields with "" escapes, CRLF or
/// LF line ends, header row required. Every row must have the header's width.
/// ParseError rows and columns are 1-based file positions (the header is row 1).
CsvTable read_csv(std::istream& in);
CsvTable read_csv_file(const std::filesystem::path& path);

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields);

/// Features in header order, label column excluded.
struct CsvDataset {
  LabeledDataset data;
  std::vector<std::string> feature_names;
};

/// Throws ParseError for malformed or non-numeric cells, LabelError for labels
/// outside {1, 2}, ValidationError if the label column is missing.
CsvDataset parse_csv_dataset(std::istream& in, const std::string& label_column);
CsvDataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column);

/// Feature matrix of a CSV; `skip_column` (if present in the header) is left out.
Matrix load_csv_features(const std::filesystem::path& path, const std::string& skip_column,
                         std::vector<std::string>* feature_names = nullptr);

/// Values are written with 17 significant digits.
void write_csv_dataset(std::ostream& out, const LabeledDataset& d,
                       const std::string& label_column = "y",
                       const std::vector<std::string>& feature_names = {});
void write_csv_dataset(const std::filesystem::path& path, const LabeledDataset& d,
                       const std::string& label_column = "y",
                       const std::vector<std::string>& feature_names = {});

/// Shortest decimal string that reads back to the same double.
std::string format_double(double v);

/// A fitted rule with where it came from.
struct ModelFile {
  LinearRule rule = LinearRule::zero(1);
  std::string provenance;
  std::uint64_t seed = 0;
  nlohmann::json hyperparameters = nlohmann::json::object();
  std::vector<std::string> feature_names;
};

/// {"p", "support", "weights", "intercept", "method", "provenance", "seed",
///  "hyperparameters", "feature_names"}; weights are listed on the support only.
nlohmann::json model_to_json(const ModelFile& model);
/// Throws ValidationError naming the offending field.
ModelFile model_from_json(const nlohmann::json& j);

void save_model(const std::filesystem::path& path, const ModelFile& model);
ModelFile load_model(const std::filesystem::path& path);

}  // namespace simlab
