// End-to-end checks against published values. One PASS/FAIL line per criterion.
// Usage: simlab_acceptance [criterion numbers...]   (default: all)

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <set>
#include <tuple>
#include <string>
#include <vector>

#include "simlab/classifiers.hpp"
#include "simlab/datagen.hpp"
#include "simlab/eval.hpp"
#include "simlab/harness.hpp"
#include "simlab/tuning.hpp"

using namespace simlab;

namespace {

struct Outcome {
  bool pass = true;
  std::string detail;

  void check(bool ok, const std::string& what) {
    if (!ok) pass = false;
    if (!detail.empty()) detail += "; ";
    detail += what + (ok ? "" : " [x]");
  }
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string pct(double v) { return fmt("%.2f", 100.0 * v); }

MetricsSummary summarize(const ExperimentResult& r, const std::string& method, int splits = -1,
                         Index p = -1) {
  std::vector<MetricsRecord> rows;
  for (const auto& rec : r.records)
    if (rec.method == method && (splits < 0 || rec.splits == splits) && (p < 0 || rec.p == p))
      rows.push_back(rec.metrics);
  return aggregate(rows);
}

bool within(double v, double target, double tol) { return std::abs(v - target) <= tol; }

ExperimentConfig setting_one_config(int reps) {
  ExperimentConfig c;
  c.seed = 7;
  c.replicates = reps;
  c.setting = SettingId::i;
  c.n1 = 50;
  c.n2 = 10;
  c.p = 1000;
  return c;
}

MethodSpec method(RuleKind kind, const std::string& label) {
  MethodSpec m;
  m.kind = kind;
  m.label = label;
  return m;
}

Outcome optimal_errors() {
  Outcome o;
  const double a = 100.0 * optimal_mcr(make_setting(SettingId::i, 1000));
  const double b = 100.0 * optimal_mcr(make_setting(SettingId::ii, 1000));
  o.check(within(a, 19.32, 0.05), "setting i " + fmt("%.4f%%", a));
  o.check(within(b, 7.0, 0.05), "setting ii " + fmt("%.4f%%", b));
  return o;
}

Outcome delta_values() {
  Outcome o;
  const double d1 = delta_p_squared(make_setting(SettingId::i, 1000));
  const double d3 = delta_p_squared(make_setting(SettingId::iii, 500));
  const double d4 = delta_p_squared(make_setting(SettingId::iv, 1000));
  o.check(within(d1, 3.004, 1e-3), "i " + fmt("%.5f", d1));
  o.check(within(d3, 0.7088, 1e-3), "iii(500) " + fmt("%.5f", d3));
  o.check(within(d4, 1.274, 1e-3), "iv " + fmt("%.5f", d4));
  double worst = 0.0;
  for (SettingId id : {SettingId::i, SettingId::ii, SettingId::iii, SettingId::iv})
    for (Index p : {Index{100}, Index{500}, Index{1000}}) {
      const GaussianModel m = make_setting(id, p);
      worst = std::max(worst, std::abs(delta_p_squared(m) - delta_p_squared_dense(m)));
    }
  o.check(worst <= 1e-8, "max |structured - dense| " + fmt("%.2e", worst));
  return o;
}

Outcome table_one() {
  ExperimentConfig c = setting_one_config(100);
  c.methods = {method(RuleKind::hr, "hr"), method(RuleKind::msplit_hr_diag, "msplit")};
  const ExperimentResult r = run_experiment(c);
  const MetricsSummary hr = summarize(r, "hr");
  const MetricsSummary ms = summarize(r, "msplit");
  Outcome o;
  o.check(within(100 * hr.mcr1_mean, 19.36, 6), "HR MCR1 " + pct(hr.mcr1_mean));
  o.check(within(100 * hr.mcr2_mean, 40.82, 8), "HR MCR2 " + pct(hr.mcr2_mean));
  o.check(within(100 * ms.mcr1_mean, 30.22, 6), "Msplit MCR1 " + pct(ms.mcr1_mean));
  o.check(within(100 * ms.mcr2_mean, 26.68, 6), "Msplit MCR2 " + pct(ms.mcr2_mean));
  o.check(ms.mcr2_mean <= hr.mcr2_mean - 0.05, "MCR2 drop >= 5 points");
  o.check(std::abs(ms.mcr1_mean - ms.mcr2_mean) < std::abs(hr.mcr1_mean - hr.mcr2_mean),
          "gap " + pct(std::abs(ms.mcr1_mean - ms.mcr2_mean)) + " < " +
              pct(std::abs(hr.mcr1_mean - hr.mcr2_mean)));
  return o;
}

Outcome table_four() {
  ExperimentConfig c = setting_one_config(100);
  c.setting = SettingId::iv;
  c.p = 500;
  c.methods = {method(RuleKind::msplit_hr_general, "msplit-general")};
  const ExperimentResult r = run_experiment(c);
  const MetricsSummary s = summarize(r, "msplit-general");
  Outcome o;
  o.check(within(100 * s.mcr2_mean, 40.7, 8), "MCR2 " + pct(s.mcr2_mean));
  o.check(s.s_median <= 5, "median S " + fmt("%.1f", s.s_median));
  o.detail += "; MCR1 " + pct(s.mcr1_mean);
  return o;
}

Outcome theorem_one() {
  ExperimentConfig c = setting_one_config(200);
  c.kind = ExperimentKind::theorem1_ignorance;
  c.n1 = 200;
  c.n2 = 20;
  c.dimensions = {100, 500, 2000};
  const ExperimentResult r = run_experiment(c);
  Outcome o;
  std::vector<MetricsSummary> s;
  for (Index p : c.dimensions) s.push_back(summarize(r, "lda-known-cov", -1, p));
  o.check(s[0].mcr2_mean < s[1].mcr2_mean && s[1].mcr2_mean < s[2].mcr2_mean,
          "MCR2 " + pct(s[0].mcr2_mean) + " < " + pct(s[1].mcr2_mean) + " < " + pct(s[2].mcr2_mean));
  o.check(s[2].mcr2_mean >= 0.9, "MCR2(2000) >= 90");
  o.check(s[2].mcr1_mean <= 0.1, "MCR1(2000) " + pct(s[2].mcr1_mean));
  return o;
}

Outcome bias_check() {
  ExperimentConfig c = setting_one_config(2000);
  c.kind = ExperimentKind::bias_verification;
  MethodSpec m = method(RuleKind::msplit_hr_diag, "msplit");
  m.tau = 2.5;
  m.splits = 10;
  c.methods = {m};
  const ExperimentResult r = run_experiment(c);
  Outcome o;
  for (const char* variant : {"msplit/uncorrected", "msplit/corrected"}) {
    std::vector<double> diff, gap;
    for (const auto& rec : r.records)
      if (rec.method == variant) {
        diff.push_back(rec.score_gap - rec.expected_gap);
        gap.push_back(rec.score_gap);
      }
    const MeanStd d = mean_std(diff);
    const MeanStd g = mean_std(gap);
    const double z = d.mean / d.se;
    o.check(std::abs(z) <= 3.0, std::string(variant) + " gap " + fmt("%.4f", g.mean) +
                                    " expected " + fmt("%.4f", g.mean - d.mean) + " z " +
                                    fmt("%.2f", z));
  }
  return o;
}

Outcome split_sweep() {
  ExperimentConfig c = setting_one_config(100);
  c.kind = ExperimentKind::l_sweep;
  c.split_counts = {1, 5, 10, 20, 30};
  c.methods = {method(RuleKind::msplit_hr_diag, "msplit")};
  const ExperimentResult r = run_experiment(c);
  const MetricsSummary one = summarize(r, "msplit", 1);
  const MetricsSummary thirty = summarize(r, "msplit", 30);
  Outcome o;
  std::string trend;
  for (int L : c.split_counts) {
    const MetricsSummary s = summarize(r, "msplit", L);
    trend += (trend.empty() ? "" : " ") + std::to_string(L) + ":" + pct(s.mcr1_mean) + "/" +
             pct(s.mcr2_mean);
  }
  o.check(thirty.mcr2_mean <= one.mcr2_mean + 0.01, "MCR2 L=30 vs L=1");
  o.check(std::abs(thirty.mcr1_mean - thirty.mcr2_mean) <= std::abs(one.mcr1_mean - one.mcr2_mean),
          "gap L=30 vs L=1");
  o.detail += "; L:MCR1/MCR2 " + trend;
  return o;
}

CovSpec random_cov(Index p, Rng& rng) {
  switch (rng.below(3)) {
    case 0: {
      std::vector<double> v;
      for (Index j = 0; j < p; ++j) v.push_back(0.25 + 3.0 * rng.uniform());
      return DiagonalCov{v};
    }
    case 1: {
      const double var = 0.5 + 2.0 * rng.uniform();
      return EquicorrelationCov{var, var * (0.9 * rng.uniform() - 0.1)};
    }
    default: {
      std::vector<EquicorrelationBlock> blocks;
      for (Index left = p; left > 0;) {
        const Index size = std::min<Index>(left, 1 + static_cast<Index>(rng.below(3)));
        blocks.push_back({size, 0.5 + rng.uniform(), 0.8 * rng.uniform()});
        left -= size;
      }
      return BlockDiagonalCov{blocks};
    }
  }
}

Outcome exact_vs_empirical() {
  Rng rng(derive_seed(7, {8}));
  const Index n = 1000000;
  Outcome o;
  double worst = 0.0;
  int failures = 0;
  for (int k = 0; k < 20; ++k) {
    const Index p = 2 + static_cast<Index>(rng.below(5));
    Vector mu1(p), mu2(p), w(p);
    for (Index j = 0; j < p; ++j) {
      mu1(j) = rng.normal();
      mu2(j) = rng.normal();
      w(j) = rng.normal();
    }
    const GaussianModel model(mu1, mu2, random_cov(p, rng));
    const LinearRule rule(w, -w.dot(0.5 * (mu1 + mu2)) + 0.5 * rng.normal(), RuleKind::zero);
    const ClassRates exact = theoretical_mcr(rule, model);
    const ClassRates emp = empirical_mcr(rule, sample_dataset(model, n, n, rng));
    for (auto [e, m] : {std::pair{exact.mcr1, emp.mcr1}, std::pair{exact.mcr2, emp.mcr2}}) {
      const double se = std::sqrt(std::max(e * (1 - e), 1e-12) / double(n));
      const double z = std::abs(e - m) / se;
      worst = std::max(worst, z);
      if (z > 3.0) ++failures;
    }
  }
  o.check(failures == 0, "40 rates, max |z| " + fmt("%.2f", worst));
  return o;
}

Outcome property_suites() {
  Outcome o;
  // The averaged rule equals the mean of the per-split discriminants.
  {
    Rng rng(901);
    double worst = 0.0;
    for (auto [id, p, general] : {std::tuple{SettingId::i, Index{1000}, false},
                                  std::tuple{SettingId::iv, Index{500}, true}}) {
      const GaussianModel model = make_setting(id, p);
      const auto d = sample_dataset(model, 50, 10, rng);
      MsplitOptions opt;
      for (double tau : {0.0, 1.0, 2.0}) {
        const MsplitFit fit = general ? fit_msplit_hr_general(d, tau, opt, rng)
                                      : fit_msplit_hr_diag(d, tau, opt, rng);
        for (int t = 0; t < 50; ++t) {
          Vector x(p);
          for (Index j = 0; j < p; ++j) x(j) = 2.0 * rng.normal();
          double mean = 0.0;
          for (const auto& piece : fit.trace.pieces) mean += piece.evaluate(x);
          mean /= static_cast<double>(fit.trace.pieces.size());
          worst = std::max(worst, std::abs(fit.rule.discriminant(x) - mean) / (1.0 + std::abs(mean)));
        }
      }
    }
    o.check(worst <= 1e-10, "collapse identity " + fmt("%.1e", worst));
  }
  // Fixed seed, fixed result: tuning plus fitting twice.
  {
    const GaussianModel model = make_setting(SettingId::i, 300);
    Rng rng(902);
    const auto d = sample_dataset(model, 40, 10, rng);
    MethodSpec m = method(RuleKind::msplit_hr_diag, "msplit");
    m.splits = 10;
    m.cv_splits = 5;
    const FitOutcome a = fit_method(m, d, 33);
    const FitOutcome b = fit_method(m, d, 33);
    o.check(a.tau == b.tau && a.rule.weights() == b.rule.weights() &&
                a.rule.intercept() == b.rule.intercept(),
            "determinism");
  }
  // Larger thresholds never keep more features.
  {
    Rng rng(903);
    const GaussianModel model = make_setting(SettingId::i, 500);
    bool monotone = true;
    for (int rep = 0; rep < 20; ++rep) {
      const auto d = sample_dataset(model, 50, 10, rng);
      const Vector t = t_statistics(d);
      const Vector md = class_means(d).second - class_means(d).first;
      std::size_t prev_t = d.p() + 1, prev_m = d.p() + 1;
      for (double tau = 0.0; tau <= 6.0; tau += 0.25) {
        const std::size_t st = select_by_t(t, tau).size();
        const std::size_t sm = select_by_meandiff(md, tau / 2).size();
        monotone = monotone && st <= prev_t && sm <= prev_m;
        prev_t = st;
        prev_m = sm;
      }
    }
    o.check(monotone, "monotone thresholding");
  }
  // Rescaling a rule leaves its error rates and predictions unchanged.
  {
    Rng rng(904);
    const GaussianModel model = make_setting(SettingId::iv, 50);
    double worst = 0.0;
    bool same_predictions = true;
    for (int k = 0; k < 20; ++k) {
      Vector w(50);
      for (Index j = 0; j < 50; ++j) w(j) = rng.normal();
      const double b = rng.normal();
      const ClassRates base = theoretical_mcr(LinearRule(w, b, RuleKind::zero), model);
      for (double c : {1e-6, 1.0, 1e6}) {
        const LinearRule scaled(c * w, c * b, RuleKind::zero);
        const ClassRates r = theoretical_mcr(scaled, model);
        worst = std::max({worst, std::abs(r.mcr1 - base.mcr1), std::abs(r.mcr2 - base.mcr2)});
        Vector x(50);
        for (Index j = 0; j < 50; ++j) x(j) = rng.normal();
        same_predictions = same_predictions && scaled.predict(x) == LinearRule(w, b, RuleKind::zero).predict(x);
      }
    }
    o.check(worst <= 1e-12 && same_predictions, "scale invariance " + fmt("%.1e", worst));
  }
  return o;
}

}  // namespace

int main(int argc, char** argv) {
  const std::vector<std::pair<std::string, std::function<Outcome()>>> criteria = {
      {"optimal error rates", optimal_errors},
      {"discriminative power", delta_values},
      {"setting i HR vs Msplit-HR", table_one},
      {"setting iv Msplit-HR-general", table_four},
      {"known-covariance LDA ignorance", theorem_one},
      {"split-rule bias term", bias_check},
      {"number of splits trend", split_sweep},
      {"exact vs empirical error rates", exact_vs_empirical},
      {"property suites", property_suites},
  };
  std::set<int> only;
  for (int i = 1; i < argc; ++i) only.insert(std::stoi(argv[i]));

  int failed = 0;
  for (std::size_t k = 0; k < criteria.size(); ++k) {
    const int id = static_cast<int>(k) + 1;
    if (!only.empty() && !only.count(id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = criteria[k].second();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("error: ") + e.what();
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s %d %s: %s (%.1fs)\n", o.pass ? "PASS" : "FAIL", id, criteria[k].first.c_str(),
                o.detail.c_str(), secs);
    std::fflush(stdout);
    if (!o.pass) ++failed;
  }
  return failed == 0 ? 0 : 1;
}
