#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "simlab/classifiers.hpp"
#include "simlab/datagen.hpp"
#include "simlab/eval.hpp"
#include "simlab/tuning.hpp"

namespace simlab {

enum class ExperimentKind { table_repro, l_sweep, theorem1_ignorance, bias_verification, custom_fit };

std::string_view to_string(ExperimentKind kind);
/// Throws ValidationError listing the valid kinds.
ExperimentKind parse_experiment_kind(std::string_view s);

/// exact: closed-form rates under the generating model; empirical: a fresh test sample.
enum class Evaluation { exact, empirical };

struct GridSpec {
  int size = 30;
  int top_k = 20;
};

/// One method entry. Without a fixed tau the threshold is tuned by leave-one-out.
struct MethodSpec {
  std::string label;  // output name; defaults to the method name
  RuleKind kind = RuleKind::hr;
  std::optional<double> tau;
  GridSpec grid;
  int splits = 30;     // L of the final fit
  int cv_splits = 10;  // L inside leave-one-out
  bool bias_correction = true;
  double alpha = 0.3;
  std::optional<double> m1;
  std::optional<double> m2;
  std::vector<double> m1_grid{0.5, 1.0, 2.0, 4.0};
  std::vector<double> m2_grid{0.5, 1.0, 1.5, 2.0, 3.0};
};

/// Names accepted in the "methods" list.
std::vector<std::string> valid_method_names();

struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::table_repro;
  std::uint64_t seed = 0;
  int replicates = 100;
  std::optional<SettingId> setting;
  bool literal_setting_ii = false;
  Index n1 = 50;
  Index n2 = 10;
  Index p = 1000;
  Evaluation evaluation = Evaluation::exact;
  Index test_n1 = 1000;
  Index test_n2 = 1000;
  std::vector<Index> dimensions{100, 500, 2000};
  std::vector<int> split_counts{1, 5, 10, 20, 30, 50};
  std::string data;
  std::string label = "y";
  std::string test_data;
  std::vector<MethodSpec> methods;
  std::filesystem::path output = "simlab-out";
  int threads = 0;  // 0: hardware concurrency
};

/// Unknown keys are rejected. Throws ValidationError with the field path.
ExperimentConfig parse_config(const nlohmann::json& j);
/// Throws ParseError for malformed JSON.
ExperimentConfig load_config(const std::filesystem::path& path);
nlohmann::json config_to_json(const ExperimentConfig& cfg);

/// Result of fitting one method to one training set.
struct FitOutcome {
  LinearRule rule = LinearRule::zero(1);
  double tau = 0.0;  // NaN for methods without a threshold
  /// Stability support for split rules, the rule's support otherwise.
  SupportSet reported_support;
  int ridge_fallbacks = 0;
  std::optional<MsplitTrace> trace;
  nlohmann::json hyperparameters = nlohmann::json::object();
};

/// Tunes (if needed) and fits. `model` is required for bayes and lda-known-cov.
FitOutcome fit_method(const MethodSpec& method, const LabeledDataset& train, std::uint64_t seed,
                      const GaussianModel* model = nullptr);

struct RunRecord {
  int replicate = 0;
  std::string method;
  MetricsRecord metrics;
  double tau = 0.0;
  double seconds = 0.0;
  int ridge_fallbacks = 0;
  int splits = 0;  // L for sweep rows
  Index p = 0;
  double score_gap = 0.0;  // delta(mu1) + delta(mu2), bias runs only
  double expected_gap = 0.0;
};

struct Table {
  std::string name;  // file stem
  std::vector<std::string> header;
  std::vector<std::vector<std::string>> rows;
};

struct ExperimentResult {
  std::vector<RunRecord> records;  // ordered by replicate, then method
  std::vector<Table> tables;       // summary first
  std::vector<FitOutcome> fits;    // custom-fit only, one per method
};

/// Runs every replicate; results do not depend on the thread count. A failing
/// replicate aborts the run with its index in the message.
ExperimentResult run_experiment(const ExperimentConfig& cfg);

/// summary.csv, replicates.csv, timing.csv, metadata.json and kind-specific tables
/// into cfg.output (created if needed). custom-fit also writes model-<label>.json.
void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& result);

/// Percent with 4 decimals, as used in the summary.
std::string format_fixed(double v, int decimals = 4);

}  // namespace simlab
