#pragma once

#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "simlab/datagen.hpp"
#include "simlab/estimators.hpp"
#include "simlab/linalg.hpp"
#include "simlab/random.hpp"

namespace simlab {

enum class RuleKind {
  zero,
  bayes,
  lda,
  lda_known_cov,
  hr,
  us_hr,
  msplit_hr_diag,
  msplit_hr_general,
  slda,
};

std::string_view to_string(RuleKind kind);
RuleKind parse_rule_kind(std::string_view s);

/// Affine discriminant delta(x) = w.x + b. Class 1 iff delta(x) < 0; a tie goes
/// to class 2. The support is {j : w_j != 0}.
class LinearRule {
 public:
  LinearRule(Vector weights, double intercept, RuleKind kind);

  /// Everything to class 2.
  static LinearRule zero(Index p, RuleKind kind = RuleKind::zero);

  const Vector& weights() const { return w_; }
  double intercept() const { return b_; }
  const SupportSet& support() const { return support_; }
  RuleKind kind() const { return kind_; }
  Index dim() const { return w_.size(); }

  /// Throws DimensionMismatch.
  double discriminant(const Vector& x) const;
  /// Discriminant of every row of x.
  Vector discriminants(const Matrix& x) const;
  int predict(const Vector& x) const { return discriminant(x) < 0.0 ? 1 : 2; }

 private:
  Vector w_;
  double b_;
  SupportSet support_;
  RuleKind kind_;
};

int predict(const LinearRule& rule, const Vector& x);

/// w = Sigma^{-1} mu_d, b = -w.mu_a. Throws NotPositiveDefinite.
LinearRule bayes_rule(const GaussianModel& model);

/// Plug-in rule with the pooled covariance; a pseudo-inverse handles p >= n - 2.
LinearRule fit_lda(const LabeledDataset& d);

/// Plug-in rule with the true covariance substituted for the pooled estimate.
LinearRule fit_lda_known_cov(const LabeledDataset& d, const CovSpec& cov);

/// Hard-thresholding rule: w_j = (mu_d_j / sigma_j^2) 1{|t_j| > tau}, b = -w.mu_a.
LinearRule fit_hr(const LabeledDataset& d, double tau);
/// fit_hr for every tau, sharing the moment computation.
std::vector<LinearRule> fit_hr_path(const LabeledDataset& d, std::span<const double> taus);

/// fit_hr on all minority rows plus a without-replacement subsample of the
/// majority class of the same size. Throws TooFewSamples if the smaller class has < 2 rows.
LinearRule fit_us_hr(const LabeledDataset& d, double tau, Rng& rng);

// ---------------------------------------------------------------------------
// Sample-split rules

/// Per class: part 1 holds floor(n_k / 2) rows, part 2 the remainder. Indices ascending.
struct ClassPartition {
  std::vector<Index> part1;
  std::vector<Index> part2;
};

struct DataSplit {
  ClassPartition class1;
  ClassPartition class2;
};

struct SplitPlan {
  std::vector<DataSplit> splits;
};

/// L independent random partitions. Throws InvalidSizes if L < 1.
SplitPlan draw_split_plan(const LabeledDataset& d, int splits, Rng& rng);
/// Throws InvalidSizes unless every split partitions each class with the required sizes.
void validate_split_plan(const SplitPlan& plan, const LabeledDataset& d);

/// Bias unit of the diagonal split rule:
/// f (1/n1' - 1/n2') Gamma(f - 1) / Gamma(f), f = n'/2 - 1, via log-gamma.
/// Throws InvalidSizes if n1' + n2' <= 6.
double bias_rbar_diag(Index n1p, Index n2p);

/// Correction of one general-covariance split that kept s features:
/// (1/n1' - 1/n2') (n' - 2) / (n' - 3 - s) s. Throws SelectionTooLarge if s >= n' - 3.
double bias_rbar_general(Index n1p, Index n2p, Index s);

/// One split's contribution sum_{j in selected} coef_j (x_j - center_j) - correction.
struct SplitPiece {
  SupportSet selected;
  Vector coef;            // aligned with selected.indices()
  Vector center;          // aligned with selected.indices()
  double rbar = 0.0;      // bias term of this split (diag: per feature, general: per split)
  double correction = 0.0;
  bool ridge_fallback = false;

  double evaluate(const Vector& x) const;
};

struct MsplitTrace {
  int splits = 0;
  std::vector<SplitPiece> pieces;  // empty unless MsplitOptions::keep_pieces
  std::vector<int> frequency;      // f_j: number of splits that kept feature j
  std::vector<Index> selected_counts;
  int ridge_fallbacks = 0;

  double mean_selected() const;
};

struct MsplitFit {
  LinearRule rule;
  MsplitTrace trace;
};

/// Class sizes fed to the bias term. `half` uses n'_k = floor(n_k / 2) as the
/// bias formulas are stated; `part2` uses the estimation-half sizes, which differ
/// by one row when n_k is odd.
enum class BiasSizes { half, part2 };

struct MsplitOptions {
  int splits = 30;
  bool bias_correction = true;
  bool keep_pieces = true;
  BiasSizes bias_sizes = BiasSizes::half;
};

/// Diagonal-covariance split rule: select by part-1 t statistics, estimate on
/// part 2, subtract half the bias unit per kept feature, average over splits.
/// Throws TooFewSamples unless floor(n_k / 2) >= 2 for both classes.
MsplitFit fit_msplit_hr_diag(const LabeledDataset& d, double tau, const MsplitOptions& options,
                             Rng& rng);
MsplitFit fit_msplit_hr_diag(const LabeledDataset& d, double tau, const SplitPlan& plan,
                             const MsplitOptions& options);
std::vector<MsplitFit> fit_msplit_hr_diag_path(const LabeledDataset& d,
                                               std::span<const double> taus,
                                               const SplitPlan& plan,
                                               const MsplitOptions& options);

/// General-covariance split rule: screen by part-1 |mean difference| (capped at
/// n' - 4 features, largest first, ties to the smaller index), plug-in LDA on the
/// kept block of part 2, subtract half of bias_rbar_general, average over splits.
MsplitFit fit_msplit_hr_general(const LabeledDataset& d, double tau,
                                const MsplitOptions& options, Rng& rng);
MsplitFit fit_msplit_hr_general(const LabeledDataset& d, double tau, const SplitPlan& plan,
                                const MsplitOptions& options);
std::vector<MsplitFit> fit_msplit_hr_general_path(const LabeledDataset& d,
                                                  std::span<const double> taus,
                                                  const SplitPlan& plan,
                                                  const MsplitOptions& options);

/// Ridge multiplier used when a kept sub-covariance is not positive definite.
inline constexpr double kRidgeEpsilon = 1e-8;

/// Thresholded-estimator rule: w = pinv(Sigma~) mu~_d, b = -w.mu_a (mu_a not thresholded).
LinearRule fit_slda(const LabeledDataset& d, double m1, double m2, double alpha);

}  // namespace simlab
