#pragma once

#include <limits>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "simlab/linalg.hpp"

namespace simlab {

/// n x p feature matrix with labels in {1, 2}. Class 2 is the minority class by
/// convention; datasets with n2 > n1 are accepted (see minority_convention_holds).
class LabeledDataset {
 public:
  /// Throws LabelError for labels outside {1, 2}, EmptyClass if a class is absent,
  /// DimensionMismatch if x.rows() != y.size().
  LabeledDataset(Matrix x, std::vector<int> y);

  const Matrix& x() const { return x_; }
  const std::vector<int>& y() const { return y_; }
  Index n() const { return x_.rows(); }
  Index p() const { return x_.cols(); }
  Index n1() const { return n1_; }
  Index n2() const { return n2_; }
  bool minority_convention_holds() const { return n2_ <= n1_; }

  /// Row indices of class `label`, ascending.
  std::vector<Index> class_rows(int label) const;
  /// New dataset made of the given rows, in the given order.
  LabeledDataset subset(std::span<const Index> rows) const;

 private:
  Matrix x_;
  std::vector<int> y_;
  Index n1_ = 0;
  Index n2_ = 0;
};

/// Sorted, duplicate-free set of 0-based feature indices.
class SupportSet {
 public:
  SupportSet() = default;
  /// Sorts `indices`; throws InvalidSpec on duplicates or an index >= p.
  SupportSet(std::vector<Index> indices, Index p);

  const std::vector<Index>& indices() const { return indices_; }
  std::size_t size() const { return indices_.size(); }
  bool empty() const { return indices_.empty(); }
  bool contains(Index j) const;
  auto begin() const { return indices_.begin(); }
  auto end() const { return indices_.end(); }

  bool operator==(const SupportSet&) const = default;

 private:
  std::vector<Index> indices_;
};

/// Class means and pooled per-feature variances of a sample split into two
/// index sets; the workhorse behind every diagonal estimator.
struct DiagMoments {
  Vector mean1;
  Vector mean2;
  Vector pooled_var;  // divisor n1 + n2 - 2
  Index n1 = 0;
  Index n2 = 0;

  Vector mean_diff() const { return mean2 - mean1; }
  Vector mean_avg() const { return 0.5 * (mean1 + mean2); }
};

/// Throws TooFewSamples unless rows1, rows2 are non-empty and total at least 3.
DiagMoments diag_moments(const Matrix& x, std::span<const Index> rows1,
                         std::span<const Index> rows2);
DiagMoments diag_moments(const LabeledDataset& d);

/// Class means over the given rows (no size requirement beyond non-empty).
Vector mean_of_rows(const Matrix& x, std::span<const Index> rows);

struct MomentEstimates {
  Vector mu1_hat;
  Vector mu2_hat;
  Vector mu_d_hat;
  Vector mu_a_hat;
  Vector diag_var;
  std::optional<SymMatrix> sigma_hat;  // present when full covariance was requested
  Index n1 = 0;
  Index n2 = 0;
};

MomentEstimates estimate_moments(const LabeledDataset& d, bool full_covariance);

std::pair<Vector, Vector> class_means(const LabeledDataset& d);

/// (1/(n-2)) sum_k sum_i (x_ik - mu_k)(x_ik - mu_k)^T. Throws TooFewSamples if n < 3.
SymMatrix pooled_covariance(const LabeledDataset& d);
/// Same estimator restricted to `features`, computed from the given class rows.
SymMatrix pooled_covariance(const Matrix& x, std::span<const Index> rows1,
                            std::span<const Index> rows2, std::span<const Index> features);

Vector pooled_diag_variances(const LabeledDataset& d);

/// Value used for t_j when the pooled variance is zero but the means differ.
inline constexpr double kSelectAlways = std::numeric_limits<double>::infinity();

/// Two-sample t statistics (mu_j2 - mu_j1) / (sigma_j sqrt(n / (n1 n2))).
/// Zero variance: t_j = 0 when the means agree, kSelectAlways otherwise.
Vector t_statistics(const LabeledDataset& d);
Vector t_statistics(const DiagMoments& m);

/// {j : |t_j| > tau}.
SupportSet select_by_t(const Vector& t, double tau);
/// {j : |mu_d_j| > tau}.
SupportSet select_by_meandiff(const Vector& mu_d_hat, double tau);

/// Entrywise (1 - 2/n) sigma_ij 1{(1 - 2/n)|sigma_ij| > M1 sqrt(log p / n)}, diagonal included.
SymMatrix slda_threshold_cov(const LabeledDataset& d, double m1);
/// mu_d_j 1{|mu_d_j| > M2 (log p / n)^alpha}.
Vector slda_threshold_meandiff(const LabeledDataset& d, double m2, double alpha);

}  // namespace simlab
