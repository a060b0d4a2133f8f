#include "simlab/eval.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "simlab/errors.hpp"

namespace simlab {

double normal_cdf(double x) { return 0.5 * std::erfc(-x / std::numbers::sqrt2); }

double delta_p_squared(const GaussianModel& model) {
  return inverse_quad_form(model.cov(), model.mu_d());
}

double delta_p_squared_dense(const GaussianModel& model) {
  const Vector mu_d = model.mu_d();
  return mu_d.dot(solve_spd(build_cov(model.cov(), model.p()), mu_d));
}

double optimal_mcr(const GaussianModel& model) {
  return normal_cdf(-std::sqrt(std::max(0.0, delta_p_squared(model))) / 2.0);
}

ClassRates theoretical_mcr(const LinearRule& rule, const GaussianModel& model) {
  if (rule.dim() != model.p()) throw DimensionMismatch("rule and model dimensions differ");
  const double var = quad_form(model.cov(), rule.weights());
  const double m1 = rule.weights().dot(model.mu1()) + rule.intercept();
  const double m2 = rule.weights().dot(model.mu2()) + rule.intercept();
  if (!(var > 0.0)) {
    const double b = rule.intercept();
    return {b >= 0.0 ? 1.0 : 0.0, b < 0.0 ? 1.0 : 0.0};
  }
  const double sd = std::sqrt(var);
  return {normal_cdf(m1 / sd), normal_cdf(-m2 / sd)};
}

ClassRates empirical_mcr(const LinearRule& rule, const LabeledDataset& test) {
  const Vector scores = rule.discriminants(test.x());
  Index wrong1 = 0, wrong2 = 0;
  for (Index i = 0; i < test.n(); ++i) {
    const int label = scores(i) < 0.0 ? 1 : 2;
    const int truth = test.y()[static_cast<std::size_t>(i)];
    if (label != truth) ++(truth == 1 ? wrong1 : wrong2);
  }
  return {static_cast<double>(wrong1) / static_cast<double>(test.n1()),
          static_cast<double>(wrong2) / static_cast<double>(test.n2())};
}

double class_score_gap(const LinearRule& rule, const GaussianModel& model) {
  return rule.discriminant(model.mu1()) + rule.discriminant(model.mu2());
}

SelectionCounts selection_metrics(const SupportSet& support, const SupportSet& true_set) {
  SelectionCounts c;
  c.s_total = static_cast<Index>(support.size());
  for (Index j : support)
    if (true_set.contains(j)) ++c.a;
  c.n_false = c.s_total - c.a;
  return c;
}

SupportSet stability_support(const MsplitTrace& trace) {
  if (trace.splits < 1) throw InvalidSizes("trace has no splits");
  std::vector<Index> keep;
  for (std::size_t j = 0; j < trace.frequency.size(); ++j)
    if (2 * trace.frequency[j] >= trace.splits) keep.push_back(static_cast<Index>(j));
  return SupportSet(std::move(keep), static_cast<Index>(trace.frequency.size()));
}

MetricsRecord MetricsRecord::make(const ClassRates& rates, const SelectionCounts& counts) {
  return {rates.mcr1, rates.mcr2, std::sqrt(rates.mcr1 * rates.mcr2),
          counts.a,   counts.n_false, counts.s_total};
}

double median(std::vector<double> values) {
  if (values.empty()) throw EmptyList("median of an empty list");
  std::sort(values.begin(), values.end());
  const std::size_t n = values.size();
  return n % 2 == 1 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

MeanStd mean_std(std::span<const double> values) {
  if (values.empty()) throw EmptyList("mean of an empty list");
  const double n = static_cast<double>(values.size());
  double mean = 0.0;
  for (double v : values) mean += v;
  mean /= n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  const double sd = values.size() > 1 ? std::sqrt(ss / (n - 1.0)) : 0.0;
  return {mean, sd, sd / std::sqrt(n)};
}

MetricsSummary aggregate(std::span<const MetricsRecord> records) {
  if (records.empty()) throw EmptyList("no records to aggregate");
  std::vector<double> m1, m2, gm, a, nf, s;
  for (const auto& r : records) {
    m1.push_back(r.mcr1);
    m2.push_back(r.mcr2);
    gm.push_back(r.gm);
    a.push_back(static_cast<double>(r.a));
    nf.push_back(static_cast<double>(r.n_false));
    s.push_back(static_cast<double>(r.s_total));
  }
  MetricsSummary out;
  out.count = records.size();
  const auto s1 = mean_std(m1), s2 = mean_std(m2), sg = mean_std(gm);
  out.mcr1_mean = s1.mean;
  out.mcr1_std = s1.std;
  out.mcr2_mean = s2.mean;
  out.mcr2_std = s2.std;
  out.gm_mean = sg.mean;
  out.gm_std = sg.std;
  out.a_median = median(std::move(a));
  out.n_median = median(std::move(nf));
  out.s_median = median(std::move(s));
  return out;
}

}  // namespace simlab
