// simlab: run experiments, fit rules to CSV data, apply saved rules.

#include <cmath>
#include <cstdio>
#include <algorithm>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "simlab/errors.hpp"
#include "simlab/harness.hpp"
#include "simlab/io.hpp"

namespace {

using namespace simlab;

void print_table(const Table& t) {
  std::vector<std::size_t> width(t.header.size());
  for (std::size_t c = 0; c < t.header.size(); ++c) width[c] = t.header[c].size();
  for (const auto& row : t.rows)
    for (std::size_t c = 0; c < row.size(); ++c) width[c] = std::max(width[c], row[c].size());
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t c = 0; c < cells.size(); ++c) {
      if (c) std::cout << "  ";
      std::cout << (c == 0 ? std::left : std::right) << std::setw(static_cast<int>(width[c]))
                << cells[c];
    }
    std::cout << '\n';
  };
  line(t.header);
  for (const auto& row : t.rows) line(row);
}

int cmd_run(const std::string& config_path, std::optional<std::uint64_t> seed,
            std::optional<int> reps, std::optional<std::string> out, std::optional<int> threads) {
  ExperimentConfig cfg = load_config(config_path);
  if (seed) cfg.seed = *seed;
  if (reps) {
    if (*reps < 1) throw ValidationError("replicates", "must be >= 1");
    cfg.replicates = *reps;
  }
  if (out) cfg.output = *out;
  if (threads) cfg.threads = *threads;
  const ExperimentResult res = run_experiment(cfg);
  write_outputs(cfg, res);
  for (const auto& t : res.tables) {
    std::cout << "# " << t.name << '\n';
    print_table(t);
  }
  std::cout << "wrote " << cfg.output.string() << '\n';
  return 0;
}

int cmd_fit(const std::string& data, const std::string& label, const std::string& method,
            const std::string& tau_grid, int splits, int cv_splits, int grid_size, int top_k,
            std::uint64_t seed, const std::string& out) {
  const CsvDataset csv = load_csv_dataset(data, label);
  const LabeledDataset& d = csv.data;
  if (!d.minority_convention_holds())
    std::cerr << "warning: class 2 (n2 = " << d.n2() << ") is larger than class 1 (n1 = "
              << d.n1() << "); the split rules assume class 2 is the minority\n";

  nlohmann::json spec = {{"name", method}, {"splits", splits}, {"cv_splits", cv_splits},
                         {"grid", {{"size", grid_size}, {"top_k", top_k}}}};
  if (tau_grid != "auto") {
    double tau = 0.0;
    try {
      std::size_t used = 0;
      tau = std::stod(tau_grid, &used);
      if (used != tau_grid.size()) throw std::invalid_argument(tau_grid);
    } catch (const std::exception&) {
      throw ValidationError("tau-grid", "expected 'auto' or a number, got '" + tau_grid + "'");
    }
    spec["tau"] = tau;
  }
  nlohmann::json cfg_json = {{"experiment", "custom-fit"}, {"seed", seed}, {"methods", {spec}},
                             {"data", data}};
  const MethodSpec m = parse_config(cfg_json).methods.front();
  const FitOutcome fit = fit_method(m, d, seed);

  ModelFile mf;
  mf.rule = fit.rule;
  mf.seed = seed;
  mf.hyperparameters = fit.hyperparameters;
  mf.provenance = "simlab fit --data " + data + " --label " + label;
  mf.feature_names = csv.feature_names;
  if (out.empty()) {
    std::cout << model_to_json(mf).dump(2) << '\n';
  } else {
    save_model(out, mf);
  }
  std::cerr << method << ": " << fit.rule.support().size() << " of " << d.p()
            << " features in the rule";
  if (!std::isnan(fit.tau)) std::cerr << ", tau = " << format_double(fit.tau);
  std::cerr << '\n';
  return 0;
}

int cmd_predict(const std::string& model_path, const std::string& data, const std::string& label,
                const std::string& out) {
  const ModelFile mf = load_model(model_path);
  std::vector<std::string> names;
  const Matrix x = load_csv_features(data, label, &names);
  if (x.cols() != mf.rule.dim())
    throw DimensionMismatch("model has p = " + std::to_string(mf.rule.dim()) + ", data has " +
                            std::to_string(x.cols()) + " feature columns");
  if (!mf.feature_names.empty() && mf.feature_names != names)
    std::cerr << "warning: feature names differ from those the model was fitted on\n";

  std::ofstream file;
  if (!out.empty()) {
    file.open(out, std::ios::binary);
    if (!file) throw Error("cannot write " + out);
  }
  std::ostream& os = out.empty() ? std::cout : file;
  const Vector score = mf.rule.discriminants(x);
  write_csv_row(os, {"row", "score", "prediction"});
  for (Index i = 0; i < x.rows(); ++i)
    write_csv_row(os, {std::to_string(i), format_double(score(i)), score(i) < 0.0 ? "1" : "2"});

  // Report error rates when the file carries labels.
  std::ifstream probe(data, std::ios::binary);
  const CsvTable table = read_csv(probe);
  if (std::find(table.header.begin(), table.header.end(), label) != table.header.end()) {
    const CsvDataset labeled = load_csv_dataset(data, label);
    const ClassRates r = empirical_mcr(mf.rule, labeled.data);
    std::cerr << "mcr1 = " << format_fixed(100.0 * r.mcr1) << "%, mcr2 = "
              << format_fixed(100.0 * r.mcr2) << "%\n";
  }
  return 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Sparse linear discriminant rules for imbalanced two-class data"};
  app.require_subcommand(1);

  auto* run = app.add_subcommand("run", "Run an experiment described by a JSON config");
  std::string config_path;
  std::optional<std::uint64_t> seed_override;
  std::optional<int> reps_override;
  std::optional<std::string> out_override;
  std::optional<int> threads_override;
  run->add_option("config", config_path, "Experiment config (JSON)")->required()->check(CLI::ExistingFile);
  run->add_option("--seed", seed_override, "Override the master seed");
  run->add_option("--reps", reps_override, "Override the replicate count");
  run->add_option("--out", out_override, "Override the output directory");
  run->add_option("--threads", threads_override, "Worker threads (0: all cores)");

  auto* fit = app.add_subcommand("fit", "Fit a rule to a labeled CSV and emit it as JSON");
  std::string data, label = "y", method, tau_grid = "auto", model_out;
  int splits = 30, cv_splits = 10, grid_size = 30, top_k = 20;
  std::uint64_t seed = 0;
  fit->add_option("--data", data, "Training CSV with a header row")->required()->check(CLI::ExistingFile);
  fit->add_option("--label", label, "Label column (values 1 and 2)")->capture_default_str();
  fit->add_option("--method", method, "Rule: " + [] {
        std::string s;
        for (const auto& n : valid_method_names())
          if (n != "bayes" && n != "lda-known-cov") s += (s.empty() ? "" : ", ") + n;
        return s;
      }())->required();
  fit->add_option("--tau-grid", tau_grid, "'auto' for leave-one-out tuning, or a fixed threshold")
      ->capture_default_str();
  fit->add_option("--splits", splits, "Number of sample splits L")->capture_default_str();
  fit->add_option("--cv-splits", cv_splits, "L used inside leave-one-out")->capture_default_str();
  fit->add_option("--grid-size", grid_size, "Quantile points in the tuning grid")->capture_default_str();
  fit->add_option("--top-k", top_k, "Largest statistics added to the grid")->capture_default_str();
  fit->add_option("--seed", seed, "Seed for splits and subsampling")->capture_default_str();
  fit->add_option("--out", model_out, "Write the model here instead of stdout");

  auto* predict = app.add_subcommand("predict", "Apply a saved rule to a CSV");
  std::string model_path, pred_data, pred_label = "y", pred_out;
  predict->add_option("--model", model_path, "Model JSON from 'simlab fit'")->required()->check(CLI::ExistingFile);
  predict->add_option("--data", pred_data, "CSV of features")->required()->check(CLI::ExistingFile);
  predict->add_option("--label", pred_label, "Label column to ignore (and score against)")
      ->capture_default_str();
  predict->add_option("--out", pred_out, "Write predictions here instead of stdout");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*run) return cmd_run(config_path, seed_override, reps_override, out_override, threads_override);
    if (*fit)
      return cmd_fit(data, label, method, tau_grid, splits, cv_splits, grid_size, top_k, seed,
                     model_out);
    if (*predict) return cmd_predict(model_path, pred_data, pred_label, pred_out);
  } catch (const ValidationError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const ParseError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
