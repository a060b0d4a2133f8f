#pragma once

#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "simlab/classifiers.hpp"
#include "simlab/estimators.hpp"

namespace simlab {

/// Which statistic a threshold is compared against.
enum class GridKind { t_scale, meandiff_scale };

std::string_view to_string(GridKind kind);

/// Candidate thresholds, strictly increasing and nonnegative.
struct ThresholdGrid {
  std::vector<double> values;
  GridKind kind = GridKind::t_scale;
};

/// |t_j| or |mu_d_j| for every feature; non-finite values are dropped.
std::vector<double> grid_statistics(const LabeledDataset& d, GridKind kind);

/// 0 plus the empirical quantiles of `magnitudes` at probabilities k / (size - 1),
/// k = 0..size-1 (linear interpolation between order statistics), deduplicated.
/// Throws InvalidSizes if size < 2.
ThresholdGrid make_grid_from_statistics(std::span<const double> magnitudes, GridKind kind,
                                        int size);
ThresholdGrid make_grid(const LabeledDataset& d, GridKind kind, int size);

/// Adds the top_k largest magnitudes to `grid`. With strict thresholding the k-th
/// largest value keeps k - 1 features, so the sparse end of the path is resolved
/// one feature at a time, which quantile spacing alone cannot do when p >> n.
ThresholdGrid add_top_order(ThresholdGrid grid, std::span<const double> magnitudes, int top_k);

/// make_grid followed by add_top_order.
ThresholdGrid make_path_grid(const LabeledDataset& d, GridKind kind, int size, int top_k);

/// Fits one rule at one threshold. The seed is derived per (threshold, held-out row).
using RuleFitter =
    std::function<LinearRule(const LabeledDataset& train, double tau, std::uint64_t seed)>;
/// Fits one rule per threshold from a single seed, so randomness (e.g. the split
/// plan) is shared across the grid. The seed is derived per held-out row.
using PathFitter = std::function<std::vector<LinearRule>(
    const LabeledDataset& train, std::span<const double> taus, std::uint64_t seed)>;

struct CvRow {
  double tau = 0.0;
  Index errors1 = 0;
  Index errors2 = 0;
  double mcr1 = 0.0;
  double mcr2 = 0.0;
  double gm = 0.0;
  /// False when the rule fitted on all rows keeps no feature (a constant classifier).
  bool eligible = true;
};

struct LoocvResult {
  double tau_star = 0.0;
  std::size_t best_index = 0;
  std::vector<CvRow> table;
};

/// Leave-one-out selection of tau minimizing held-out minority error; ties go to
/// the smaller held-out GM, then the larger tau. Thresholds whose full-data rule
/// is empty are skipped unless every threshold is. Throws TooFewSamples if n2 < 2.
LoocvResult loocv_select(const LabeledDataset& d, const RuleFitter& fitter,
                         const ThresholdGrid& grid, std::uint64_t seed);
LoocvResult loocv_select_path(const LabeledDataset& d, const PathFitter& fitter,
                              const ThresholdGrid& grid, std::uint64_t seed);

PathFitter hr_path_fitter();
RuleFitter us_hr_fitter();
/// Split-rule fitters draw a fresh plan of `splits` splits per call. The bias term
/// uses the estimation-half sizes, since leaving one row out makes a class odd.
PathFitter msplit_diag_path_fitter(int splits, bool bias_correction = true);
PathFitter msplit_general_path_fitter(int splits, bool bias_correction = true);

struct SldaParams {
  double m1 = 1.0;
  double m2 = 1.0;
  double alpha = 0.3;
};

struct SldaCvRow {
  SldaParams params;
  CvRow cv;
};

struct SldaCvResult {
  SldaParams best;
  std::vector<SldaCvRow> table;
};

/// Same criterion over the (m1, m2) product grid with alpha fixed; ties prefer
/// the larger m2, then the larger m1.
SldaCvResult loocv_select_slda(const LabeledDataset& d, std::span<const double> m1_grid,
                               std::span<const double> m2_grid, double alpha,
                               std::uint64_t seed);

}  // namespace simlab
