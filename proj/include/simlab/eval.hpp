#pragma once

#include <span>

#include "simlab/classifiers.hpp"
#include "simlab/datagen.hpp"
#include "simlab/estimators.hpp"

namespace simlab {

/// Standard normal CDF, 0.5 erfc(-x / sqrt 2).
double normal_cdf(double x);

/// mu_d^T Sigma^{-1} mu_d through the structured solver (closed forms where available).
double delta_p_squared(const GaussianModel& model);
/// Same quantity through a dense Cholesky solve of the realized covariance.
double delta_p_squared_dense(const GaussianModel& model);

/// Phi(-Delta_p / 2).
double optimal_mcr(const GaussianModel& model);

struct ClassRates {
  double mcr1 = 0.0;
  double mcr2 = 0.0;
};

/// Exact conditional error rates of an affine rule under the model:
/// MCR_1 = Phi((w.mu1 + b) / s), MCR_2 = Phi(-(w.mu2 + b) / s), s^2 = w^T Sigma w.
/// With s = 0 the rule is constant: (1{b >= 0}, 1{b < 0}).
ClassRates theoretical_mcr(const LinearRule& rule, const GaussianModel& model);

/// Per-class error fractions on a labeled test set.
ClassRates empirical_mcr(const LinearRule& rule, const LabeledDataset& test);

/// delta(mu1) + delta(mu2): difference of the class-wise standardized-error
/// numerators. Zero in expectation for an unbiased split rule.
double class_score_gap(const LinearRule& rule, const GaussianModel& model);

struct SelectionCounts {
  Index a = 0;        // |support & true|
  Index n_false = 0;  // |support \ true|
  Index s_total = 0;  // |support|
};

SelectionCounts selection_metrics(const SupportSet& support, const SupportSet& true_set);

/// {j : f_j / L >= 0.5}.
SupportSet stability_support(const MsplitTrace& trace);

struct MetricsRecord {
  double mcr1 = 0.0;
  double mcr2 = 0.0;
  double gm = 0.0;
  Index a = 0;
  Index n_false = 0;
  Index s_total = 0;

  static MetricsRecord make(const ClassRates& rates, const SelectionCounts& counts);
};

struct MetricsSummary {
  std::size_t count = 0;
  double mcr1_mean = 0.0, mcr1_std = 0.0;
  double mcr2_mean = 0.0, mcr2_std = 0.0;
  double gm_mean = 0.0, gm_std = 0.0;
  double a_median = 0.0, n_median = 0.0, s_median = 0.0;
};

/// Means and sample standard deviations (divisor R - 1, zero for R = 1) of the
/// rates; medians of the counts. Throws EmptyList.
MetricsSummary aggregate(std::span<const MetricsRecord> records);

/// Median with the two middle values averaged for even counts. Throws EmptyList.
double median(std::vector<double> values);

struct MeanStd {
  double mean = 0.0;
  double std = 0.0;
  /// std / sqrt(count)
  double se = 0.0;
};

MeanStd mean_std(std::span<const double> values);

}  // namespace simlab
