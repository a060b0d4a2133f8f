#include "simlab/io.hpp"

#include <charconv>
#include <cmath>
#include <fstream>
#include <sstream>

#include "simlab/errors.hpp"

namespace simlab {

namespace {

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  return out;
}

double parse_number(const std::string& cell, std::size_t row, std::size_t col) {
  const char* first = cell.data();
  const char* last = cell.data() + cell.size();
  while (first < last && (*first == ' ' || *first == '\t')) ++first;
  while (last > first && (last[-1] == ' ' || last[-1] == '\t')) --last;
  if (first < last && *first == '+') ++first;
  double v = 0.0;
  const auto [ptr, ec] = std::from_chars(first, last, v);
  if (first == last || ec != std::errc() || ptr != last)
    throw ParseError("row " + std::to_string(row) + ", column " + std::to_string(col) +
                         ": not a number: '" + cell + "'",
                     row, col);
  return v;
}

std::size_t column_of(const std::vector<std::string>& header, const std::string& name) {
  for (std::size_t c = 0; c < header.size(); ++c)
    if (header[c] == name) return c;
  return header.size();
}

}  // namespace

CsvTable read_csv(std::istream& in) {
  CsvTable table;
  std::vector<std::string> record;
  std::string field;
  std::size_t line = 1;
  std::size_t record_line = 1;
  bool quoted = false;
  bool was_quoted = false;
  bool any = false;

  auto end_field = [&] {
    record.push_back(std::move(field));
    field.clear();
    was_quoted = false;
  };
  auto end_record = [&] {
    end_field();
    const bool blank = record.size() == 1 && record[0].empty();
    if (!blank) {
      if (table.header.empty() && table.rows.empty() && !any) {
        table.header = std::move(record);
        any = true;
      } else {
        if (record.size() != table.header.size())
          throw ParseError("row " + std::to_string(record_line) + " has " +
                               std::to_string(record.size()) + " fields, expected " +
                               std::to_string(table.header.size()),
                           record_line, std::min(record.size(), table.header.size()) + 1);
        table.rows.push_back(std::move(record));
      }
    }
    record.clear();
  };

  char ch = 0;
  while (in.get(ch)) {
    if (quoted) {
      if (ch == '"') {
        if (in.peek() == '"') {
          in.get(ch);
          field.push_back('"');
        } else {
          quoted = false;
        }
      } else {
        if (ch == '\n') ++line;
        field.push_back(ch);
      }
      continue;
    }
    switch (ch) {
      case '"':
        if (!field.empty() || was_quoted)
          throw ParseError("row " + std::to_string(line) + ": stray quote", line,
                           record.size() + 1);
        quoted = true;
        was_quoted = true;
        break;
      case ',':
        end_field();
        break;
      case '\r':
        if (in.peek() == '\n') break;
        [[fallthrough]];
      case '\n':
        end_record();
        ++line;
        record_line = line;
        break;
      default:
        if (was_quoted)
          throw ParseError("row " + std::to_string(line) + ": text after closing quote", line,
                           record.size() + 1);
        field.push_back(ch);
    }
  }
  if (quoted) throw ParseError("unterminated quoted field", record_line, record.size() + 1);
  if (!field.empty() || !record.empty() || was_quoted) end_record();
  if (table.header.empty()) throw ParseError("missing header row", 1, 1);
  return table;
}

CsvTable read_csv_file(const std::filesystem::path& path) {
  auto in = open_in(path);
  return read_csv(in);
}

void write_csv_row(std::ostream& out, const std::vector<std::string>& fields) {
  for (std::size_t i = 0; i < fields.size(); ++i) {
    if (i) out << ',';
    const auto& f = fields[i];
    if (f.find_first_of(",\"\r\n") == std::string::npos) {
      out << f;
      continue;
    }
    out << '"';
    for (char c : f) {
      if (c == '"') out << '"';
      out << c;
    }
    out << '"';
  }
  out << '\n';
}

CsvDataset parse_csv_dataset(std::istream& in, const std::string& label_column) {
  const CsvTable table = read_csv(in);
  const std::size_t label = column_of(table.header, label_column);
  if (label == table.header.size())
    throw ValidationError("label", "column '" + label_column + "' not found in header");
  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(table.header.size() - 1);
  Matrix x(n, p);
  std::vector<int> y(static_cast<std::size_t>(n));
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    const auto file_row = static_cast<std::size_t>(i) + 2;
    Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      const double v = parse_number(row[c], file_row, c + 1);
      if (c == label) {
        if (v != 1.0 && v != 2.0)
          throw LabelError("row " + std::to_string(file_row) + ": label '" + row[c] +
                           "' is not 1 or 2");
        y[static_cast<std::size_t>(i)] = static_cast<int>(v);
      } else {
        x(i, j++) = v;
      }
    }
  }
  CsvDataset out{LabeledDataset(std::move(x), std::move(y)), {}};
  for (std::size_t c = 0; c < table.header.size(); ++c)
    if (c != label) out.feature_names.push_back(table.header[c]);
  return out;
}

CsvDataset load_csv_dataset(const std::filesystem::path& path, const std::string& label_column) {
  auto in = open_in(path);
  return parse_csv_dataset(in, label_column);
}

Matrix load_csv_features(const std::filesystem::path& path, const std::string& skip_column,
                         std::vector<std::string>* feature_names) {
  const CsvTable table = read_csv_file(path);
  const std::size_t skip = column_of(table.header, skip_column);
  const bool skipping = skip < table.header.size();
  const auto n = static_cast<Index>(table.rows.size());
  const auto p = static_cast<Index>(table.header.size() - (skipping ? 1 : 0));
  Matrix x(n, p);
  for (Index i = 0; i < n; ++i) {
    const auto& row = table.rows[static_cast<std::size_t>(i)];
    Index j = 0;
    for (std::size_t c = 0; c < row.size(); ++c) {
      if (skipping && c == skip) continue;
      x(i, j++) = parse_number(row[c], static_cast<std::size_t>(i) + 2, c + 1);
    }
  }
  if (feature_names) {
    feature_names->clear();
    for (std::size_t c = 0; c < table.header.size(); ++c)
      if (!(skipping && c == skip)) feature_names->push_back(table.header[c]);
  }
  return x;
}

std::string format_double(double v) {
  char buf[64];
  const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, ptr);
}

void write_csv_dataset(std::ostream& out, const LabeledDataset& d,
                       const std::string& label_column,
                       const std::vector<std::string>& feature_names) {
  if (!feature_names.empty() && static_cast<Index>(feature_names.size()) != d.p())
    throw DimensionMismatch("feature name count does not match p");
  std::vector<std::string> fields;
  for (Index j = 0; j < d.p(); ++j)
    fields.push_back(feature_names.empty() ? "x" + std::to_string(j + 1)
                                           : feature_names[static_cast<std::size_t>(j)]);
  fields.push_back(label_column);
  write_csv_row(out, fields);
  for (Index i = 0; i < d.n(); ++i) {
    fields.clear();
    for (Index j = 0; j < d.p(); ++j) fields.push_back(format_double(d.x()(i, j)));
    fields.push_back(std::to_string(d.y()[static_cast<std::size_t>(i)]));
    write_csv_row(out, fields);
  }
}

void write_csv_dataset(const std::filesystem::path& path, const LabeledDataset& d,
                       const std::string& label_column,
                       const std::vector<std::string>& feature_names) {
  auto out = open_out(path);
  write_csv_dataset(out, d, label_column, feature_names);
}

nlohmann::json model_to_json(const ModelFile& model) {
  const auto& rule = model.rule;
  nlohmann::json support = nlohmann::json::array();
  nlohmann::json weights = nlohmann::json::array();
  for (Index j : rule.support().indices()) {
    support.push_back(j);
    weights.push_back(rule.weights()(j));
  }
  nlohmann::json j = {
      {"p", rule.dim()},
      {"method", std::string(to_string(rule.kind()))},
      {"support", support},
      {"weights", weights},
      {"intercept", rule.intercept()},
      {"provenance", model.provenance},
      {"seed", model.seed},
      {"hyperparameters", model.hyperparameters},
  };
  if (!model.feature_names.empty()) j["feature_names"] = model.feature_names;
  return j;
}

ModelFile model_from_json(const nlohmann::json& j) {
  auto field = [&](const char* name) -> const nlohmann::json& {
    if (!j.contains(name)) throw ValidationError(name, "missing");
    return j.at(name);
  };
  try {
    const auto p = field("p").get<Index>();
    if (p < 1) throw ValidationError("p", "must be positive");
    const auto support = field("support").get<std::vector<Index>>();
    const auto weights = field("weights").get<std::vector<double>>();
    if (support.size() != weights.size())
      throw ValidationError("weights", "length differs from support");
    Vector w = Vector::Zero(p);
    for (std::size_t k = 0; k < support.size(); ++k) {
      if (support[k] < 0 || support[k] >= p) throw ValidationError("support", "index out of range");
      w(support[k]) = weights[k];
    }
    RuleKind kind = RuleKind::zero;
    if (j.contains("method")) {
      try {
        kind = parse_rule_kind(j.at("method").get<std::string>());
      } catch (const InvalidSpec& e) {
        throw ValidationError("method", e.what());
      }
    }
    ModelFile m;
    m.rule = LinearRule(std::move(w), field("intercept").get<double>(), kind);
    if (j.contains("provenance")) m.provenance = j.at("provenance").get<std::string>();
    if (j.contains("seed")) m.seed = j.at("seed").get<std::uint64_t>();
    if (j.contains("hyperparameters")) m.hyperparameters = j.at("hyperparameters");
    if (j.contains("feature_names"))
      m.feature_names = j.at("feature_names").get<std::vector<std::string>>();
    return m;
  } catch (const nlohmann::json::exception& e) {
    throw ValidationError("model", e.what());
  }
}

void save_model(const std::filesystem::path& path, const ModelFile& model) {
  auto out = open_out(path);
  out << model_to_json(model).dump(2) << '\n';
}

ModelFile load_model(const std::filesystem::path& path) {
  auto in = open_in(path);
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(in);
  } catch (const nlohmann::json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0, e.byte);
  }
  return model_from_json(j);
}

}  // namespace simlab
