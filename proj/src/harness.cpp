#include "simlab/harness.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <exception>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <thread>

#include "simlab/errors.hpp"
#include "simlab/io.hpp"
#include "simlab/random.hpp"

namespace simlab {

namespace {

using nlohmann::json;

constexpr std::uint64_t kDataStream = 0;
constexpr std::uint64_t kTestStream = 0x7e57;
constexpr std::uint64_t kTuneStream = 1;
constexpr std::uint64_t kFitStream = 2;
constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

constexpr std::pair<ExperimentKind, std::string_view> kKindNames[] = {
    {ExperimentKind::table_repro, "table-repro"},
    {ExperimentKind::l_sweep, "L-sweep"},
    {ExperimentKind::theorem1_ignorance, "theorem1-ignorance"},
    {ExperimentKind::bias_verification, "bias-verification"},
    {ExperimentKind::custom_fit, "custom-fit"},
};

std::string join(const std::vector<std::string>& items) {
  std::string out;
  for (const auto& s : items) out += (out.empty() ? "" : ", ") + s;
  return out;
}

bool is_split_rule(RuleKind k) {
  return k == RuleKind::msplit_hr_diag || k == RuleKind::msplit_hr_general;
}

// Reads fields of one JSON object and rejects whatever was not read.
class ObjectReader {
 public:
  ObjectReader(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ValidationError(path_.empty() ? "config" : path_, "expected an object");
  }

  std::string field(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  const json* find(const std::string& key) {
    seen_.insert(key);
    const auto it = j_.find(key);
    return it == j_.end() ? nullptr : &*it;
  }

  template <class T>
  std::optional<T> get(const std::string& key) {
    const json* v = find(key);
    if (!v) return std::nullopt;
    try {
      if constexpr (std::is_same_v<T, bool>) {
        if (!v->is_boolean()) throw ValidationError(field(key), "expected true or false");
      } else if constexpr (std::is_integral_v<T>) {
        if (!v->is_number_integer()) throw ValidationError(field(key), "expected an integer");
        if constexpr (std::is_unsigned_v<T>)
          if (!v->is_number_unsigned() && v->get<std::int64_t>() < 0)
            throw ValidationError(field(key), "expected a nonnegative integer");
      }
      return v->get<T>();
    } catch (const json::exception&) {
      throw ValidationError(field(key), "has the wrong type");
    }
  }

  void finish() const {
    for (const auto& [key, value] : j_.items())
      if (!seen_.count(key)) throw ValidationError(field(key), "unknown key");
  }

 private:
  const json& j_;
  std::string path_;
  std::set<std::string> seen_;
};

void require(bool ok, const std::string& field, const std::string& what) {
  if (!ok) throw ValidationError(field, what);
}

MethodSpec parse_method(const json& j, const std::string& path) {
  MethodSpec m;
  auto set_kind = [&](const std::string& name, const std::string& field) {
    const auto names = valid_method_names();
    if (std::find(names.begin(), names.end(), name) == names.end())
      throw ValidationError(field, "unknown method '" + name + "'; valid names: " + join(names));
    m.kind = parse_rule_kind(name);
    m.label = name;
  };
  if (j.is_string()) {
    set_kind(j.get<std::string>(), path);
    return m;
  }
  ObjectReader r(j, path);
  const auto name = r.get<std::string>("name");
  require(name.has_value(), r.field("name"), "missing");
  set_kind(*name, r.field("name"));
  if (auto v = r.get<std::string>("label")) m.label = *v;
  m.tau = r.get<double>("tau");
  if (m.tau) require(*m.tau >= 0.0 && std::isfinite(*m.tau), r.field("tau"), "must be >= 0");
  if (const json* g = r.find("grid")) {
    ObjectReader gr(*g, r.field("grid"));
    if (auto v = gr.get<int>("size")) m.grid.size = *v;
    if (auto v = gr.get<int>("top_k")) m.grid.top_k = *v;
    gr.finish();
    require(m.grid.size >= 2, gr.field("size"), "must be >= 2");
    require(m.grid.top_k >= 0, gr.field("top_k"), "must be >= 0");
  }
  if (auto v = r.get<int>("splits")) m.splits = *v;
  if (auto v = r.get<int>("cv_splits")) m.cv_splits = *v;
  require(m.splits >= 1, r.field("splits"), "must be >= 1");
  require(m.cv_splits >= 1, r.field("cv_splits"), "must be >= 1");
  if (auto v = r.get<bool>("bias_correction")) m.bias_correction = *v;
  if (auto v = r.get<double>("alpha")) m.alpha = *v;
  require(m.alpha > 0.0 && m.alpha < 0.5, r.field("alpha"), "must lie in (0, 0.5)");
  m.m1 = r.get<double>("m1");
  m.m2 = r.get<double>("m2");
  if (m.m1) require(*m.m1 > 0.0, r.field("m1"), "must be > 0");
  if (m.m2) require(*m.m2 > 0.0, r.field("m2"), "must be > 0");
  if (auto v = r.get<std::vector<double>>("m1_grid")) m.m1_grid = *v;
  if (auto v = r.get<std::vector<double>>("m2_grid")) m.m2_grid = *v;
  for (const auto* grid : {&m.m1_grid, &m.m2_grid}) {
    const std::string f = r.field(grid == &m.m1_grid ? "m1_grid" : "m2_grid");
    require(!grid->empty(), f, "must be non-empty");
    for (double v : *grid) require(v > 0.0, f, "entries must be > 0");
  }
  r.finish();
  return m;
}

// ---------------------------------------------------------------- fitting

ThresholdGrid grid_for(const MethodSpec& m, const LabeledDataset& d) {
  const GridKind kind =
      m.kind == RuleKind::msplit_hr_general ? GridKind::meandiff_scale : GridKind::t_scale;
  return make_path_grid(d, kind, m.grid.size, m.grid.top_k);
}

double tune_tau(const MethodSpec& m, const LabeledDataset& d, std::uint64_t seed) {
  if (m.tau) return *m.tau;
  const ThresholdGrid grid = grid_for(m, d);
  const std::uint64_t s = derive_seed(seed, {kTuneStream});
  switch (m.kind) {
    case RuleKind::hr:
      return loocv_select_path(d, hr_path_fitter(), grid, s).tau_star;
    case RuleKind::us_hr:
      return loocv_select(d, us_hr_fitter(), grid, s).tau_star;
    case RuleKind::msplit_hr_diag:
      return loocv_select_path(d, msplit_diag_path_fitter(m.cv_splits, m.bias_correction), grid, s)
          .tau_star;
    case RuleKind::msplit_hr_general:
      return loocv_select_path(d, msplit_general_path_fitter(m.cv_splits, m.bias_correction),
                               grid, s)
          .tau_star;
    default:
      return kNaN;
  }
}

FitOutcome from_split_fit(MsplitFit fit, double tau) {
  FitOutcome out;
  out.tau = tau;
  out.reported_support = stability_support(fit.trace);
  out.ridge_fallbacks = fit.trace.ridge_fallbacks;
  out.rule = std::move(fit.rule);
  out.trace = std::move(fit.trace);
  return out;
}

MsplitFit fit_split_rule(const MethodSpec& m, const LabeledDataset& d, double tau, int splits,
                         bool bias_correction, std::uint64_t seed) {
  Rng rng(derive_seed(seed, {kFitStream}));
  MsplitOptions options;
  options.splits = splits;
  options.bias_correction = bias_correction;
  return m.kind == RuleKind::msplit_hr_diag ? fit_msplit_hr_diag(d, tau, options, rng)
                                            : fit_msplit_hr_general(d, tau, options, rng);
}

const GaussianModel& need_model(const GaussianModel* model, const MethodSpec& m) {
  if (!model)
    throw ValidationError("methods", "'" + std::string(to_string(m.kind)) +
                                         "' needs a generating model (use a setting)");
  return *model;
}

// ---------------------------------------------------------------- output helpers


const std::vector<std::string> kSummaryHeader = {
    "method",  "mcr1_mean", "mcr1_std", "mcr2_mean", "mcr2_std",
    "gm_mean", "gm_std",    "a_median", "n_median",  "s_median"};

std::vector<std::string> summary_cells(const MetricsSummary& s, bool truth_known) {
  return {format_fixed(100.0 * s.mcr1_mean), format_fixed(100.0 * s.mcr1_std),
          format_fixed(100.0 * s.mcr2_mean), format_fixed(100.0 * s.mcr2_std),
          format_fixed(100.0 * s.gm_mean),   format_fixed(100.0 * s.gm_std),
          truth_known ? format_fixed(s.a_median) : "NA",
          truth_known ? format_fixed(s.n_median) : "NA",
          format_fixed(s.s_median)};
}

// Groups records by key in first-seen order.
template <class Key>
std::vector<std::pair<Key, std::vector<const RunRecord*>>> group_by(
    const std::vector<RunRecord>& records, Key (*key)(const RunRecord&)) {
  std::vector<std::pair<Key, std::vector<const RunRecord*>>> groups;
  for (const auto& r : records) {
    const Key k = key(r);
    auto it = std::find_if(groups.begin(), groups.end(), [&](const auto& g) { return g.first == k; });
    if (it == groups.end()) {
      groups.push_back({k, {}});
      it = groups.end() - 1;
    }
    it->second.push_back(&r);
  }
  return groups;
}

MetricsSummary summarize(const std::vector<const RunRecord*>& rows) {
  std::vector<MetricsRecord> m;
  m.reserve(rows.size());
  for (const auto* r : rows) m.push_back(r->metrics);
  return aggregate(m);
}

Table summary_table(const std::vector<RunRecord>& records, bool truth_known,
                    std::string (*key)(const RunRecord&)) {
  Table t{"summary", kSummaryHeader, {}};
  for (const auto& [name, rows] : group_by<std::string>(records, key)) {
    std::vector<std::string> row{name};
    const auto cells = summary_cells(summarize(rows), truth_known);
    row.insert(row.end(), cells.begin(), cells.end());
    t.rows.push_back(std::move(row));
  }
  return t;
}

std::string by_method(const RunRecord& r) { return r.method; }
std::string by_method_splits(const RunRecord& r) {
  return r.method + "/L=" + std::to_string(r.splits);
}
std::string by_method_p(const RunRecord& r) { return r.method + "/p=" + std::to_string(r.p); }

// ---------------------------------------------------------------- parallel replicates

int worker_count(int requested, std::size_t jobs) {
  unsigned n = requested > 0 ? static_cast<unsigned>(requested) : std::thread::hardware_concurrency();
  if (n == 0) n = 1;
  return static_cast<int>(std::min<std::size_t>(n, std::max<std::size_t>(jobs, 1)));
}

// Runs job(i) for i < count on a small pool; output order is by i regardless of
// scheduling. The lowest failing index is rethrown with its position.
template <class Job>
std::vector<RunRecord> run_jobs(std::size_t count, int threads, const char* unit, Job job) {
  std::vector<std::vector<RunRecord>> results(count);
  std::vector<std::exception_ptr> errors(count);
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  auto work = [&] {
    for (std::size_t i = next++; i < count && !failed; i = next++) {
      try {
        results[i] = job(i);
      } catch (...) {
        errors[i] = std::current_exception();
        failed = true;
      }
    }
  };
  const int n = worker_count(threads, count);
  if (n <= 1) {
    work();
  } else {
    std::vector<std::thread> pool;
    for (int t = 0; t < n; ++t) pool.emplace_back(work);
    for (auto& th : pool) th.join();
  }
  for (std::size_t i = 0; i < count; ++i) {
    if (!errors[i]) continue;
    try {
      std::rethrow_exception(errors[i]);
    } catch (const std::exception& e) {
      throw Error(std::string(unit) + " " + std::to_string(i) + " failed: " + e.what());
    }
  }
  std::vector<RunRecord> out;
  for (auto& r : results)
    for (auto& rec : r) out.push_back(std::move(rec));
  return out;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

SettingOptions setting_options(const ExperimentConfig& cfg) {
  SettingOptions o;
  o.literal_setting_ii = cfg.literal_setting_ii;
  return o;
}

ClassRates evaluate(const LinearRule& rule, const GaussianModel* model,
                    const LabeledDataset* test) {
  return test ? empirical_mcr(rule, *test) : theoretical_mcr(rule, *model);
}

MetricsRecord metrics_for(const FitOutcome& fit, const ClassRates& rates,
                          const std::optional<SupportSet>& truth) {
  if (truth) return MetricsRecord::make(rates, selection_metrics(fit.reported_support, *truth));
  SelectionCounts c;
  c.s_total = static_cast<Index>(fit.reported_support.size());
  return MetricsRecord::make(rates, c);
}

// ---------------------------------------------------------------- experiments

ExperimentResult run_table(const ExperimentConfig& cfg) {
  const GaussianModel model = make_setting(*cfg.setting, cfg.p, setting_options(cfg));
  const GaussianSampler sampler(model);
  const SupportSet truth = model.active_set();
  const bool empirical = cfg.evaluation == Evaluation::empirical;

  ExperimentResult res;
  res.records = run_jobs(static_cast<std::size_t>(cfg.replicates), cfg.threads, "replicate",
                         [&](std::size_t i) {
    const auto r = static_cast<std::uint64_t>(i);
    Rng data_rng(derive_seed(cfg.seed, {r, kDataStream}));
    const LabeledDataset d = sampler.sample(cfg.n1, cfg.n2, data_rng);
    std::optional<LabeledDataset> test;
    if (empirical) {
      Rng test_rng(derive_seed(cfg.seed, {r, kTestStream}));
      test.emplace(sampler.sample(cfg.test_n1, cfg.test_n2, test_rng));
    }
    std::vector<RunRecord> out;
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      const auto& m = cfg.methods[k];
      const auto t0 = std::chrono::steady_clock::now();
      const FitOutcome fit = fit_method(m, d, derive_seed(cfg.seed, {r, k + 1}), &model);
      RunRecord rec;
      rec.replicate = static_cast<int>(i);
      rec.method = m.label;
      rec.metrics = metrics_for(fit, evaluate(fit.rule, &model, test ? &*test : nullptr), truth);
      rec.tau = fit.tau;
      rec.ridge_fallbacks = fit.ridge_fallbacks;
      rec.splits = is_split_rule(m.kind) ? m.splits : 0;
      rec.p = cfg.p;
      rec.seconds = seconds_since(t0);
      out.push_back(std::move(rec));
    }
    return out;
  });
  res.tables.push_back(summary_table(res.records, true, by_method));
  return res;
}

ExperimentResult run_sweep(const ExperimentConfig& cfg) {
  const GaussianModel model = make_setting(*cfg.setting, cfg.p, setting_options(cfg));
  const GaussianSampler sampler(model);
  const SupportSet truth = model.active_set();
  const bool empirical = cfg.evaluation == Evaluation::empirical;

  ExperimentResult res;
  res.records = run_jobs(static_cast<std::size_t>(cfg.replicates), cfg.threads, "replicate",
                         [&](std::size_t i) {
    const auto r = static_cast<std::uint64_t>(i);
    Rng data_rng(derive_seed(cfg.seed, {r, kDataStream}));
    const LabeledDataset d = sampler.sample(cfg.n1, cfg.n2, data_rng);
    std::optional<LabeledDataset> test;
    if (empirical) {
      Rng test_rng(derive_seed(cfg.seed, {r, kTestStream}));
      test.emplace(sampler.sample(cfg.test_n1, cfg.test_n2, test_rng));
    }
    std::vector<RunRecord> out;
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      const auto& m = cfg.methods[k];
      const std::uint64_t seed = derive_seed(cfg.seed, {r, k + 1});
      auto t0 = std::chrono::steady_clock::now();
      // One threshold per replicate; the L-split fit reuses the same stream for
      // every L, so smaller L are prefixes of larger ones.
      const double tau = tune_tau(m, d, seed);
      double tune_seconds = seconds_since(t0);
      for (int L : cfg.split_counts) {
        t0 = std::chrono::steady_clock::now();
        const FitOutcome fit =
            from_split_fit(fit_split_rule(m, d, tau, L, m.bias_correction, seed), tau);
        RunRecord rec;
        rec.replicate = static_cast<int>(i);
        rec.method = m.label;
        rec.metrics = metrics_for(fit, evaluate(fit.rule, &model, test ? &*test : nullptr), truth);
        rec.tau = tau;
        rec.ridge_fallbacks = fit.ridge_fallbacks;
        rec.splits = L;
        rec.p = cfg.p;
        rec.seconds = seconds_since(t0) + tune_seconds;
        tune_seconds = 0.0;
        out.push_back(std::move(rec));
      }
    }
    return out;
  });
  res.tables.push_back(summary_table(res.records, true, by_method_splits));

  Table sweep{"sweep", {"method", "splits"}, {}};
  sweep.header.insert(sweep.header.end(), kSummaryHeader.begin() + 1, kSummaryHeader.end());
  for (const auto& [key, rows] : group_by<std::string>(res.records, by_method_splits)) {
    std::vector<std::string> row{rows.front()->method, std::to_string(rows.front()->splits)};
    const auto cells = summary_cells(summarize(rows), true);
    row.insert(row.end(), cells.begin(), cells.end());
    sweep.rows.push_back(std::move(row));
  }
  res.tables.push_back(std::move(sweep));
  return res;
}

ExperimentResult run_theorem1(const ExperimentConfig& cfg) {
  std::vector<GaussianModel> models;
  std::vector<GaussianSampler> samplers;
  for (Index p : cfg.dimensions) models.push_back(make_setting(*cfg.setting, p, setting_options(cfg)));
  for (const auto& m : models) samplers.emplace_back(m);

  std::vector<MethodSpec> methods = cfg.methods;
  if (methods.empty()) {
    MethodSpec m;
    m.kind = RuleKind::lda_known_cov;
    m.label = "lda-known-cov";
    methods.push_back(m);
  }
  const auto reps = static_cast<std::size_t>(cfg.replicates);
  const std::size_t jobs = reps * cfg.dimensions.size();

  ExperimentResult res;
  res.records = run_jobs(jobs, cfg.threads, "job", [&](std::size_t job) {
    const std::size_t q = job / reps;
    const auto r = static_cast<std::uint64_t>(job % reps);
    const GaussianModel& model = models[q];
    const auto p = static_cast<std::uint64_t>(cfg.dimensions[q]);
    Rng data_rng(derive_seed(cfg.seed, {p, r, kDataStream}));
    const LabeledDataset d = samplers[q].sample(cfg.n1, cfg.n2, data_rng);
    const SupportSet truth = model.active_set();
    std::vector<RunRecord> out;
    for (std::size_t k = 0; k < methods.size(); ++k) {
      const auto t0 = std::chrono::steady_clock::now();
      const FitOutcome fit = fit_method(methods[k], d, derive_seed(cfg.seed, {p, r, k + 1}), &model);
      RunRecord rec;
      rec.replicate = static_cast<int>(r);
      rec.method = methods[k].label;
      rec.metrics = metrics_for(fit, theoretical_mcr(fit.rule, model), truth);
      rec.tau = fit.tau;
      rec.p = cfg.dimensions[q];
      rec.seconds = seconds_since(t0);
      out.push_back(std::move(rec));
    }
    return out;
  });
  res.tables.push_back(summary_table(res.records, true, by_method_p));

  Table t{"theorem1",
          {"method", "p", "delta_sq", "optimal_mcr", "mcr1_mean", "mcr1_se", "mcr2_mean", "mcr2_se"},
          {}};
  for (const auto& [key, rows] : group_by<std::string>(res.records, by_method_p)) {
    std::vector<double> m1, m2;
    for (const auto* r : rows) {
      m1.push_back(r->metrics.mcr1);
      m2.push_back(r->metrics.mcr2);
    }
    const auto q = static_cast<std::size_t>(
        std::find(cfg.dimensions.begin(), cfg.dimensions.end(), rows.front()->p) -
        cfg.dimensions.begin());
    const MeanStd a = mean_std(m1);
    const MeanStd b = mean_std(m2);
    t.rows.push_back({rows.front()->method, std::to_string(rows.front()->p),
                      format_fixed(delta_p_squared(models[q]), 6),
                      format_fixed(100.0 * optimal_mcr(models[q])), format_fixed(100.0 * a.mean),
                      format_fixed(100.0 * a.se), format_fixed(100.0 * b.mean),
                      format_fixed(100.0 * b.se)});
  }
  res.tables.push_back(std::move(t));
  return res;
}

double expected_gap(const MethodSpec& m, const LabeledDataset& d, const MsplitTrace& trace) {
  const Index n1p = d.n1() / 2;
  const Index n2p = d.n2() / 2;
  if (m.kind == RuleKind::msplit_hr_diag) return bias_rbar_diag(n1p, n2p) * trace.mean_selected();
  double sum = 0.0;
  for (Index s : trace.selected_counts)
    if (s > 0) sum += bias_rbar_general(n1p, n2p, s);
  return sum / static_cast<double>(trace.selected_counts.size());
}

ExperimentResult run_bias(const ExperimentConfig& cfg) {
  const GaussianModel model = make_setting(*cfg.setting, cfg.p, setting_options(cfg));
  const GaussianSampler sampler(model);
  const SupportSet truth = model.active_set();

  ExperimentResult res;
  res.records = run_jobs(static_cast<std::size_t>(cfg.replicates), cfg.threads, "replicate",
                         [&](std::size_t i) {
    const auto r = static_cast<std::uint64_t>(i);
    Rng data_rng(derive_seed(cfg.seed, {r, kDataStream}));
    const LabeledDataset d = sampler.sample(cfg.n1, cfg.n2, data_rng);
    std::vector<RunRecord> out;
    for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
      const auto& m = cfg.methods[k];
      const std::uint64_t seed = derive_seed(cfg.seed, {r, k + 1});
      const double tau = tune_tau(m, d, seed);
      // Same stream, hence the same split plan, for both variants.
      for (bool corrected : {false, true}) {
        const auto t0 = std::chrono::steady_clock::now();
        const FitOutcome fit =
            from_split_fit(fit_split_rule(m, d, tau, m.splits, corrected, seed), tau);
        RunRecord rec;
        rec.replicate = static_cast<int>(i);
        rec.method = m.label + (corrected ? "/corrected" : "/uncorrected");
        rec.metrics = metrics_for(fit, theoretical_mcr(fit.rule, model), truth);
        rec.tau = tau;
        rec.ridge_fallbacks = fit.ridge_fallbacks;
        rec.splits = m.splits;
        rec.p = cfg.p;
        rec.score_gap = class_score_gap(fit.rule, model);
        rec.expected_gap = corrected ? 0.0 : expected_gap(m, d, *fit.trace);
        rec.seconds = seconds_since(t0);
        out.push_back(std::move(rec));
      }
    }
    return out;
  });
  res.tables.push_back(summary_table(res.records, true, by_method));

  Table t{"bias",
          {"method", "replicates", "gap_mean", "gap_se", "expected_mean", "z"},
          {}};
  for (const auto& [key, rows] : group_by<std::string>(res.records, by_method)) {
    std::vector<double> gap, expected, diff;
    for (const auto* r : rows) {
      gap.push_back(r->score_gap);
      expected.push_back(r->expected_gap);
      diff.push_back(r->score_gap - r->expected_gap);
    }
    const MeanStd g = mean_std(gap);
    const MeanStd e = mean_std(expected);
    // paired: the expected gap varies with the selected count of each replicate
    const MeanStd dz = mean_std(diff);
    const double z = dz.se > 0.0 ? dz.mean / dz.se : 0.0;
    t.rows.push_back({key, std::to_string(rows.size()), format_fixed(g.mean, 6),
                      format_fixed(g.se, 6), format_fixed(e.mean, 6), format_fixed(z, 4)});
  }
  res.tables.push_back(std::move(t));
  return res;
}

ExperimentResult run_custom(const ExperimentConfig& cfg) {
  std::optional<GaussianModel> model;
  std::optional<LabeledDataset> train;
  std::optional<LabeledDataset> test;
  if (!cfg.data.empty()) {
    train.emplace(load_csv_dataset(cfg.data, cfg.label).data);
  } else {
    model.emplace(make_setting(*cfg.setting, cfg.p, setting_options(cfg)));
    Rng data_rng(derive_seed(cfg.seed, {0, kDataStream}));
    train.emplace(sample_dataset(*model, cfg.n1, cfg.n2, data_rng));
  }
  if (!cfg.test_data.empty()) {
    test.emplace(load_csv_dataset(cfg.test_data, cfg.label).data);
    if (test->p() != train->p()) throw DimensionMismatch("test data has a different width");
  } else if (model && cfg.evaluation == Evaluation::empirical) {
    Rng test_rng(derive_seed(cfg.seed, {0, kTestStream}));
    test.emplace(sample_dataset(*model, cfg.test_n1, cfg.test_n2, test_rng));
  } else if (!model) {
    test = train;  // resubstitution error
  }
  std::optional<SupportSet> truth;
  if (model) truth = model->active_set();

  ExperimentResult res;
  for (std::size_t k = 0; k < cfg.methods.size(); ++k) {
    const auto& m = cfg.methods[k];
    const auto t0 = std::chrono::steady_clock::now();
    FitOutcome fit;
    try {
      fit = fit_method(m, *train, derive_seed(cfg.seed, {0, k + 1}), model ? &*model : nullptr);
    } catch (const std::exception& e) {
      throw Error("method " + m.label + " failed: " + e.what());
    }
    RunRecord rec;
    rec.method = m.label;
    rec.metrics = metrics_for(fit, evaluate(fit.rule, model ? &*model : nullptr, test ? &*test : nullptr), truth);
    rec.tau = fit.tau;
    rec.ridge_fallbacks = fit.ridge_fallbacks;
    rec.splits = is_split_rule(m.kind) ? m.splits : 0;
    rec.p = train->p();
    rec.seconds = seconds_since(t0);
    res.records.push_back(std::move(rec));
    res.fits.push_back(std::move(fit));
  }
  res.tables.push_back(summary_table(res.records, truth.has_value(), by_method));
  return res;
}

void write_table(const std::filesystem::path& path, const std::vector<std::string>& header,
                 const std::vector<std::vector<std::string>>& rows) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write " + path.string());
  write_csv_row(out, header);
  for (const auto& row : rows) write_csv_row(out, row);
}

}  // namespace

std::string_view to_string(ExperimentKind kind) {
  for (const auto& [k, name] : kKindNames)
    if (k == kind) return name;
  return "unknown";
}

ExperimentKind parse_experiment_kind(std::string_view s) {
  std::vector<std::string> names;
  for (const auto& [k, name] : kKindNames) {
    if (name == s) return k;
    names.emplace_back(name);
  }
  throw ValidationError("experiment", "unknown kind '" + std::string(s) + "'; valid kinds: " + join(names));
}

std::vector<std::string> valid_method_names() {
  return {"hr",  "us-hr", "msplit-hr-diag", "msplit-hr-general", "slda",
          "lda", "lda-known-cov", "bayes"};
}

std::string format_fixed(double v, int decimals) {
  if (std::isnan(v)) return "NA";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", decimals, v);
  std::string s(buf);
  if (s.find_first_not_of("-0.") == std::string::npos && s.front() == '-') s.erase(0, 1);
  return s;
}

ExperimentConfig parse_config(const json& j) {
  ObjectReader r(j, "");
  ExperimentConfig cfg;
  const auto kind = r.get<std::string>("experiment");
  require(kind.has_value(), "experiment", "missing");
  cfg.kind = parse_experiment_kind(*kind);
  const auto seed = r.get<std::uint64_t>("seed");
  require(seed.has_value(), "seed", "missing (runs are always explicitly seeded)");
  cfg.seed = *seed;
  if (auto v = r.get<int>("replicates")) cfg.replicates = *v;
  require(cfg.replicates >= 1, "replicates", "must be >= 1");
  r.get<std::string>("description");
  if (auto v = r.get<std::string>("setting")) {
    try {
      cfg.setting = parse_setting_id(*v);
    } catch (const Error&) {
      throw ValidationError("setting", "unknown setting '" + *v + "'; valid: i, ii, iii, iv");
    }
  }
  if (auto v = r.get<bool>("literal_setting_ii")) cfg.literal_setting_ii = *v;
  if (auto v = r.get<Index>("n1")) cfg.n1 = *v;
  if (auto v = r.get<Index>("n2")) cfg.n2 = *v;
  if (auto v = r.get<Index>("p")) cfg.p = *v;
  require(cfg.n1 >= 1, "n1", "must be >= 1");
  require(cfg.n2 >= 1, "n2", "must be >= 1");
  require(cfg.p >= 1, "p", "must be >= 1");
  if (auto v = r.get<std::string>("evaluation")) {
    if (*v == "exact")
      cfg.evaluation = Evaluation::exact;
    else if (*v == "empirical")
      cfg.evaluation = Evaluation::empirical;
    else
      throw ValidationError("evaluation", "must be 'exact' or 'empirical'");
  }
  if (auto v = r.get<Index>("test_n1")) cfg.test_n1 = *v;
  if (auto v = r.get<Index>("test_n2")) cfg.test_n2 = *v;
  require(cfg.test_n1 >= 1 && cfg.test_n2 >= 1, "test_n1", "test sizes must be >= 1");
  if (auto v = r.get<std::vector<Index>>("dimensions")) cfg.dimensions = *v;
  require(!cfg.dimensions.empty(), "dimensions", "must be non-empty");
  for (Index p : cfg.dimensions) require(p >= 1, "dimensions", "entries must be >= 1");
  if (auto v = r.get<std::vector<int>>("split_counts")) cfg.split_counts = *v;
  require(!cfg.split_counts.empty(), "split_counts", "must be non-empty");
  for (int L : cfg.split_counts) require(L >= 1, "split_counts", "entries must be >= 1");
  if (auto v = r.get<std::string>("data")) cfg.data = *v;
  if (auto v = r.get<std::string>("label")) cfg.label = *v;
  if (auto v = r.get<std::string>("test_data")) cfg.test_data = *v;
  if (auto v = r.get<std::string>("output")) cfg.output = *v;
  if (auto v = r.get<int>("threads")) cfg.threads = *v;
  require(cfg.threads >= 0, "threads", "must be >= 0");
  if (const json* ms = r.find("methods")) {
    require(ms->is_array(), "methods", "expected an array");
    for (std::size_t k = 0; k < ms->size(); ++k)
      cfg.methods.push_back(parse_method((*ms)[k], "methods[" + std::to_string(k) + "]"));
  }
  r.finish();

  std::set<std::string> labels;
  for (std::size_t k = 0; k < cfg.methods.size(); ++k)
    require(labels.insert(cfg.methods[k].label).second, "methods[" + std::to_string(k) + "].label",
            "duplicate label '" + cfg.methods[k].label + "'");
  if (cfg.kind != ExperimentKind::theorem1_ignorance)
    require(!cfg.methods.empty(), "methods", "at least one method is required");
  if (cfg.kind == ExperimentKind::custom_fit) {
    require(!cfg.data.empty() || cfg.setting.has_value(), "data", "custom-fit needs data or a setting");
  } else {
    require(cfg.setting.has_value(), "setting", "missing");
  }
  if (cfg.kind == ExperimentKind::l_sweep || cfg.kind == ExperimentKind::bias_verification) {
    for (std::size_t k = 0; k < cfg.methods.size(); ++k)
      require(is_split_rule(cfg.methods[k].kind), "methods[" + std::to_string(k) + "].name",
              "this experiment needs msplit-hr-diag or msplit-hr-general");
  }
  return cfg;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ParseError(path.string() + ": " + e.what(), 0, e.byte);
  }
  return parse_config(j);
}

json config_to_json(const ExperimentConfig& cfg) {
  json methods = json::array();
  for (const auto& m : cfg.methods) {
    json e = {{"name", std::string(to_string(m.kind))}, {"label", m.label}};
    if (m.tau) e["tau"] = *m.tau;
    e["grid"] = {{"size", m.grid.size}, {"top_k", m.grid.top_k}};
    if (is_split_rule(m.kind)) {
      e["splits"] = m.splits;
      e["cv_splits"] = m.cv_splits;
      e["bias_correction"] = m.bias_correction;
    }
    if (m.kind == RuleKind::slda) {
      e["alpha"] = m.alpha;
      if (m.m1) e["m1"] = *m.m1;
      if (m.m2) e["m2"] = *m.m2;
      e["m1_grid"] = m.m1_grid;
      e["m2_grid"] = m.m2_grid;
    }
    methods.push_back(std::move(e));
  }
  json j = {
      {"experiment", std::string(to_string(cfg.kind))},
      {"seed", cfg.seed},
      {"replicates", cfg.replicates},
      {"n1", cfg.n1},
      {"n2", cfg.n2},
      {"p", cfg.p},
      {"evaluation", cfg.evaluation == Evaluation::exact ? "exact" : "empirical"},
      {"test_n1", cfg.test_n1},
      {"test_n2", cfg.test_n2},
      {"dimensions", cfg.dimensions},
      {"split_counts", cfg.split_counts},
      {"label", cfg.label},
      {"methods", methods},
  };
  if (cfg.setting) j["setting"] = to_string(*cfg.setting);
  if (cfg.literal_setting_ii) j["literal_setting_ii"] = true;
  if (!cfg.data.empty()) j["data"] = cfg.data;
  if (!cfg.test_data.empty()) j["test_data"] = cfg.test_data;
  return j;
}

FitOutcome fit_method(const MethodSpec& m, const LabeledDataset& train, std::uint64_t seed,
                      const GaussianModel* model) {
  FitOutcome out;
  out.tau = kNaN;
  json hp = {{"method", std::string(to_string(m.kind))}};
  switch (m.kind) {
    case RuleKind::zero:
      out.rule = LinearRule::zero(train.p());
      break;
    case RuleKind::bayes:
      out.rule = bayes_rule(need_model(model, m));
      break;
    case RuleKind::lda:
      out.rule = fit_lda(train);
      break;
    case RuleKind::lda_known_cov:
      out.rule = fit_lda_known_cov(train, need_model(model, m).cov());
      break;
    case RuleKind::hr: {
      out.tau = tune_tau(m, train, seed);
      out.rule = fit_hr(train, out.tau);
      break;
    }
    case RuleKind::us_hr: {
      out.tau = tune_tau(m, train, seed);
      Rng rng(derive_seed(seed, {kFitStream}));
      out.rule = fit_us_hr(train, out.tau, rng);
      break;
    }
    case RuleKind::msplit_hr_diag:
    case RuleKind::msplit_hr_general: {
      const double tau = tune_tau(m, train, seed);
      out = from_split_fit(fit_split_rule(m, train, tau, m.splits, m.bias_correction, seed), tau);
      hp["splits"] = m.splits;
      hp["cv_splits"] = m.cv_splits;
      hp["bias_correction"] = m.bias_correction;
      break;
    }
    case RuleKind::slda: {
      SldaParams params{m.m1.value_or(1.0), m.m2.value_or(1.0), m.alpha};
      if (!m.m1 || !m.m2) {
        const std::vector<double> g1 = m.m1 ? std::vector<double>{*m.m1} : m.m1_grid;
        const std::vector<double> g2 = m.m2 ? std::vector<double>{*m.m2} : m.m2_grid;
        params = loocv_select_slda(train, g1, g2, m.alpha, derive_seed(seed, {kTuneStream})).best;
      }
      out.rule = fit_slda(train, params.m1, params.m2, params.alpha);
      hp["m1"] = params.m1;
      hp["m2"] = params.m2;
      hp["alpha"] = params.alpha;
      break;
    }
  }
  if (!out.trace) out.reported_support = out.rule.support();
  if (!std::isnan(out.tau)) {
    hp["tau"] = out.tau;
    hp["tau_source"] = m.tau ? "fixed" : "loocv";
  }
  out.hyperparameters = std::move(hp);
  return out;
}

ExperimentResult run_experiment(const ExperimentConfig& cfg) {
  switch (cfg.kind) {
    case ExperimentKind::table_repro:
      return run_table(cfg);
    case ExperimentKind::l_sweep:
      return run_sweep(cfg);
    case ExperimentKind::theorem1_ignorance:
      return run_theorem1(cfg);
    case ExperimentKind::bias_verification:
      return run_bias(cfg);
    case ExperimentKind::custom_fit:
      return run_custom(cfg);
  }
  throw ValidationError("experiment", "unsupported kind");
}

void write_outputs(const ExperimentConfig& cfg, const ExperimentResult& res) {
  std::filesystem::create_directories(cfg.output);
  for (const auto& t : res.tables) write_table(cfg.output / (t.name + ".csv"), t.header, t.rows);

  std::vector<std::vector<std::string>> rows;
  for (const auto& r : res.records) {
    rows.push_back({std::to_string(r.replicate), r.method, std::to_string(r.splits),
                    std::to_string(r.p), std::isnan(r.tau) ? "NA" : format_double(r.tau),
                    format_double(r.metrics.mcr1), format_double(r.metrics.mcr2),
                    format_double(r.metrics.gm), std::to_string(r.metrics.a),
                    std::to_string(r.metrics.n_false), std::to_string(r.metrics.s_total),
                    std::to_string(r.ridge_fallbacks), format_double(r.score_gap),
                    format_double(r.expected_gap)});
  }
  write_table(cfg.output / "replicates.csv",
              {"replicate", "method", "splits", "p", "tau", "mcr1", "mcr2", "gm", "a", "n_false",
               "s_total", "ridge_fallbacks", "score_gap", "expected_gap"},
              rows);

  rows.clear();
  for (const auto& r : res.records)
    rows.push_back({std::to_string(r.replicate), r.method, std::to_string(r.splits),
                    std::to_string(r.p), format_fixed(r.seconds, 6)});
  write_table(cfg.output / "timing.csv", {"replicate", "method", "splits", "p", "seconds"}, rows);

  const json meta = {
      {"generator", std::string(Rng::kGeneratorName)},
      {"seed_derivation", "splitmix64 over (seed, replicate, method)"},
      {"config", config_to_json(cfg)},
  };
  std::ofstream out(cfg.output / "metadata.json", std::ios::binary);
  if (!out) throw Error("cannot write metadata.json");
  out << meta.dump(2) << '\n';

  if (cfg.kind == ExperimentKind::custom_fit) {
    for (std::size_t k = 0; k < res.fits.size(); ++k) {
      ModelFile mf;
      mf.rule = res.fits[k].rule;
      mf.seed = derive_seed(cfg.seed, {0, k + 1});
      mf.hyperparameters = res.fits[k].hyperparameters;
      mf.provenance = "simlab run custom-fit, " +
                      (cfg.data.empty() ? "setting " + to_string(*cfg.setting) : "data " + cfg.data);
      save_model(cfg.output / ("model-" + cfg.methods[k].label + ".json"), mf);
    }
  }
}

}  // namespace simlab
