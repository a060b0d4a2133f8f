#include "simlab/tuning.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "simlab/errors.hpp"
#include "simlab/random.hpp"

namespace simlab {

namespace {


using CandidateFitter =
    std::function<std::vector<LinearRule>(const LabeledDataset& train, std::uint64_t fold)>;

// Held-out error counts for each candidate. `fit(train, fold)` returns one rule
// per candidate; `fold` is the held-out row, or n for the full-data fit.
std::vector<CvRow> loocv_table(const LabeledDataset& d, std::size_t candidates,
                               const CandidateFitter& fit) {
  if (d.n2() < 2 || d.n1() < 2)
    throw TooFewSamples("leave-one-out needs at least 2 rows in each class");
  std::vector<CvRow> rows(candidates);
  std::vector<Index> keep(static_cast<std::size_t>(d.n() - 1));
  for (Index i = 0; i < d.n(); ++i) {
    std::size_t k = 0;
    for (Index r = 0; r < d.n(); ++r)
      if (r != i) keep[k++] = r;
    const LabeledDataset train = d.subset(keep);
    const auto rules = fit(train, static_cast<std::uint64_t>(i));
    const Vector held = d.x().row(i).transpose();
    const int truth = d.y()[static_cast<std::size_t>(i)];
    for (std::size_t g = 0; g < candidates; ++g) {
      if (rules[g].predict(held) != truth) ++(truth == 1 ? rows[g].errors1 : rows[g].errors2);
    }
  }
  const auto full = fit(d, static_cast<std::uint64_t>(d.n()));
  for (std::size_t g = 0; g < candidates; ++g) {
    auto& row = rows[g];
    row.mcr1 = static_cast<double>(row.errors1) / static_cast<double>(d.n1());
    row.mcr2 = static_cast<double>(row.errors2) / static_cast<double>(d.n2());
    row.gm = std::sqrt(row.mcr1 * row.mcr2);
    row.eligible = !full[g].support().empty();
  }
  return rows;
}

// Later candidates are the sparser ones and win exact ties.
std::size_t choose(std::vector<CvRow>& rows) {
  const bool any = std::any_of(rows.begin(), rows.end(), [](const CvRow& r) { return r.eligible; });
  if (!any)
    for (auto& r : rows) r.eligible = true;
  std::size_t best = rows.size();
  for (std::size_t g = 0; g < rows.size(); ++g) {
    if (!rows[g].eligible) continue;
    if (best == rows.size()) {
      best = g;
      continue;
    }
    const auto& a = rows[g];
    const auto& b = rows[best];
    if (a.errors2 < b.errors2 || (a.errors2 == b.errors2 && a.gm <= b.gm)) best = g;
  }
  return best;
}

void check_grid(const ThresholdGrid& grid) {
  if (grid.values.empty()) throw InvalidSizes("threshold grid is empty");
}

}  // namespace

std::string_view to_string(GridKind kind) {
  return kind == GridKind::t_scale ? "t-scale" : "meandiff-scale";
}

std::vector<double> grid_statistics(const LabeledDataset& d, GridKind kind) {
  const Vector stat =
      kind == GridKind::t_scale ? t_statistics(d) : Vector(diag_moments(d).mean_diff());
  std::vector<double> out;
  out.reserve(static_cast<std::size_t>(stat.size()));
  for (Index j = 0; j < stat.size(); ++j)
    if (std::isfinite(stat(j))) out.push_back(std::abs(stat(j)));
  return out;
}

ThresholdGrid make_grid_from_statistics(std::span<const double> magnitudes, GridKind kind,
                                        int size) {
  if (size < 2) throw InvalidSizes("grid size must be >= 2");
  std::vector<double> sorted(magnitudes.begin(), magnitudes.end());
  std::sort(sorted.begin(), sorted.end());
  std::vector<double> values{0.0};
  if (!sorted.empty()) {
    const double last = static_cast<double>(sorted.size() - 1);
    for (int k = 0; k < size; ++k) {
      const double pos = last * static_cast<double>(k) / static_cast<double>(size - 1);
      const auto lo = static_cast<std::size_t>(std::floor(pos));
      const auto hi = std::min(lo + 1, sorted.size() - 1);
      const double frac = pos - static_cast<double>(lo);
      values.push_back(sorted[lo] + frac * (sorted[hi] - sorted[lo]));
    }
  }
  std::sort(values.begin(), values.end());
  values.erase(std::unique(values.begin(), values.end()), values.end());
  return {std::move(values), kind};
}

ThresholdGrid make_grid(const LabeledDataset& d, GridKind kind, int size) {
  const auto stats = grid_statistics(d, kind);
  return make_grid_from_statistics(stats, kind, size);
}

ThresholdGrid add_top_order(ThresholdGrid grid, std::span<const double> magnitudes, int top_k) {
  std::vector<double> sorted(magnitudes.begin(), magnitudes.end());
  std::sort(sorted.begin(), sorted.end(), std::greater<>());
  const auto k = std::min(sorted.size(), static_cast<std::size_t>(std::max(top_k, 0)));
  grid.values.insert(grid.values.end(), sorted.begin(), sorted.begin() + static_cast<std::ptrdiff_t>(k));
  std::sort(grid.values.begin(), grid.values.end());
  grid.values.erase(std::unique(grid.values.begin(), grid.values.end()), grid.values.end());
  return grid;
}

ThresholdGrid make_path_grid(const LabeledDataset& d, GridKind kind, int size, int top_k) {
  const auto stats = grid_statistics(d, kind);
  return add_top_order(make_grid_from_statistics(stats, kind, size), stats, top_k);
}

LoocvResult loocv_select(const LabeledDataset& d, const RuleFitter& fitter,
                         const ThresholdGrid& grid, std::uint64_t seed) {
  check_grid(grid);
  auto table = loocv_table(d, grid.values.size(), [&](const LabeledDataset& train, std::uint64_t fold) {
    std::vector<LinearRule> rules;
    rules.reserve(grid.values.size());
    for (std::size_t g = 0; g < grid.values.size(); ++g)
      rules.push_back(fitter(train, grid.values[g], derive_seed(seed, {g, fold})));
    return rules;
  });
  for (std::size_t g = 0; g < table.size(); ++g) table[g].tau = grid.values[g];
  const auto best = choose(table);
  return {grid.values[best], best, std::move(table)};
}

LoocvResult loocv_select_path(const LabeledDataset& d, const PathFitter& fitter,
                              const ThresholdGrid& grid, std::uint64_t seed) {
  check_grid(grid);
  auto table = loocv_table(d, grid.values.size(), [&](const LabeledDataset& train, std::uint64_t fold) {
    return fitter(train, grid.values, derive_seed(seed, {fold}));
  });
  for (std::size_t g = 0; g < table.size(); ++g) table[g].tau = grid.values[g];
  const auto best = choose(table);
  return {grid.values[best], best, std::move(table)};
}

PathFitter hr_path_fitter() {
  return [](const LabeledDataset& train, std::span<const double> taus, std::uint64_t) {
    return fit_hr_path(train, taus);
  };
}

RuleFitter us_hr_fitter() {
  return [](const LabeledDataset& train, double tau, std::uint64_t seed) {
    Rng rng(seed);
    return fit_us_hr(train, tau, rng);
  };
}

namespace {

template <class PathFn>
PathFitter msplit_fitter(int splits, bool bias_correction, PathFn path) {
  return [splits, bias_correction, path](const LabeledDataset& train, std::span<const double> taus,
                        std::uint64_t seed) {
    Rng rng(seed);
    const SplitPlan plan = draw_split_plan(train, splits, rng);
    MsplitOptions options;
    options.splits = splits;
    options.bias_correction = bias_correction;
    options.keep_pieces = false;
    options.bias_sizes = BiasSizes::part2;
    auto fits = path(train, taus, plan, options);
    std::vector<LinearRule> rules;
    rules.reserve(fits.size());
    for (auto& f : fits) rules.push_back(std::move(f.rule));
    return rules;
  };
}

}  // namespace

PathFitter msplit_diag_path_fitter(int splits, bool bias_correction) {
  return msplit_fitter(splits, bias_correction, [](const LabeledDataset& d, std::span<const double> taus,
                                  const SplitPlan& plan, const MsplitOptions& o) {
    return fit_msplit_hr_diag_path(d, taus, plan, o);
  });
}

PathFitter msplit_general_path_fitter(int splits, bool bias_correction) {
  return msplit_fitter(splits, bias_correction, [](const LabeledDataset& d, std::span<const double> taus,
                                  const SplitPlan& plan, const MsplitOptions& o) {
    return fit_msplit_hr_general_path(d, taus, plan, o);
  });
}

SldaCvResult loocv_select_slda(const LabeledDataset& d, std::span<const double> m1_grid,
                               std::span<const double> m2_grid, double alpha,
                               std::uint64_t /*seed*/) {
  if (m1_grid.empty() || m2_grid.empty()) throw InvalidSizes("SLDA grids must be non-empty");
  std::vector<double> m1s(m1_grid.begin(), m1_grid.end());
  std::vector<double> m2s(m2_grid.begin(), m2_grid.end());
  std::sort(m1s.begin(), m1s.end());
  std::sort(m2s.begin(), m2s.end());
  // m2-major so later candidates are sparser in the mean difference.
  std::vector<SldaParams> cands;
  for (double m2 : m2s)
    for (double m1 : m1s) cands.push_back({m1, m2, alpha});
  auto table = loocv_table(d, cands.size(), [&](const LabeledDataset& train, std::uint64_t) {
    std::vector<LinearRule> rules;
    rules.reserve(cands.size());
    for (const auto& c : cands) rules.push_back(fit_slda(train, c.m1, c.m2, c.alpha));
    return rules;
  });
  const auto best = choose(table);
  SldaCvResult out;
  out.best = cands[best];
  for (std::size_t g = 0; g < cands.size(); ++g) out.table.push_back({cands[g], table[g]});
  return out;
}

}  // namespace simlab
