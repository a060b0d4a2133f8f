#include "simlab/classifiers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "simlab/errors.hpp"

namespace simlab {

namespace {

constexpr std::pair<RuleKind, std::string_view> kRuleNames[] = {
    {RuleKind::zero, "zero"},
    {RuleKind::bayes, "bayes"},
    {RuleKind::lda, "lda"},
    {RuleKind::lda_known_cov, "lda-known-cov"},
    {RuleKind::hr, "hr"},
    {RuleKind::us_hr, "us-hr"},
    {RuleKind::msplit_hr_diag, "msplit-hr-diag"},
    {RuleKind::msplit_hr_general, "msplit-hr-general"},
    {RuleKind::slda, "slda"},
};

// Variances used as HR denominators; a zero variance is floored so a perfectly
// separating constant feature gets a large finite weight.
Vector floored_variances(const Vector& var) {
  const double top = var.size() > 0 ? var.maxCoeff() : 0.0;
  const double floor = top > 0.0 ? 1e-12 * top : 1e-12;
  return var.cwiseMax(floor);
}

void require_split_sizes(const LabeledDataset& d) {
  if (d.n1() / 2 < 2 || d.n2() / 2 < 2)
    throw TooFewSamples("sample splitting needs floor(n_k / 2) >= 2 in both classes");
}

std::pair<Index, Index> bias_sizes(const LabeledDataset& d, BiasSizes which) {
  if (which == BiasSizes::half) return {d.n1() / 2, d.n2() / 2};
  return {d.n1() - d.n1() / 2, d.n2() - d.n2() / 2};
}

std::vector<Index> shuffled(std::vector<Index> rows, Rng& rng) {
  for (std::size_t i = rows.size(); i > 1; --i) {
    const auto j = static_cast<std::size_t>(rng.below(i));
    std::swap(rows[i - 1], rows[j]);
  }
  return rows;
}

ClassPartition partition_class(const std::vector<Index>& rows, Rng& rng) {
  auto perm = shuffled(rows, rng);
  const auto half = perm.size() / 2;
  ClassPartition part;
  part.part1.assign(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(half));
  part.part2.assign(perm.begin() + static_cast<std::ptrdiff_t>(half), perm.end());
  std::sort(part.part1.begin(), part.part1.end());
  std::sort(part.part2.begin(), part.part2.end());
  return part;
}

void check_partition(const ClassPartition& part, std::vector<Index> rows) {
  if (part.part1.size() != rows.size() / 2)
    throw InvalidSizes("split part 1 must hold floor(n_k / 2) rows");
  std::vector<Index> joined = part.part1;
  joined.insert(joined.end(), part.part2.begin(), part.part2.end());
  std::sort(joined.begin(), joined.end());
  if (joined != rows) throw InvalidSizes("split parts must partition the class rows");
}

struct PathState {
  Vector w;
  double b = 0.0;
  MsplitTrace trace;
};

std::vector<PathState> init_path(std::size_t count, Index p, int splits) {
  std::vector<PathState> states(count);
  for (auto& s : states) {
    s.w = Vector::Zero(p);
    s.trace.splits = splits;
    s.trace.frequency.assign(static_cast<std::size_t>(p), 0);
  }
  return states;
}

std::vector<MsplitFit> finish_path(std::vector<PathState>& states, RuleKind kind) {
  std::vector<MsplitFit> out;
  out.reserve(states.size());
  for (auto& s : states) {
    const double inv = 1.0 / static_cast<double>(s.trace.splits);
    out.push_back({LinearRule(s.w * inv, s.b * inv, kind), std::move(s.trace)});
  }
  return out;
}

// Gathers the piece for `features` and orders it by feature index.
SplitPiece make_piece(std::vector<Index> features, const Vector& coef, const Vector& center,
                      Index p) {
  std::vector<std::size_t> order(features.size());
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(),
            [&](std::size_t a, std::size_t b) { return features[a] < features[b]; });
  SplitPiece piece;
  piece.coef.resize(static_cast<Index>(features.size()));
  piece.center.resize(static_cast<Index>(features.size()));
  std::vector<Index> sorted(features.size());
  for (std::size_t k = 0; k < order.size(); ++k) {
    sorted[k] = features[order[k]];
    piece.coef(static_cast<Index>(k)) = coef(static_cast<Index>(order[k]));
    piece.center(static_cast<Index>(k)) = center(static_cast<Index>(order[k]));
  }
  piece.selected = SupportSet(std::move(sorted), p);
  return piece;
}

// Sigma~^{-1} mu~_d with the ridge fallback, then the pseudo-inverse as last resort.
Vector solve_kept_block(const Matrix& cov, const Vector& rhs, bool& fallback) {
  fallback = false;
  try {
    return solve_spd(SymMatrix(cov), rhs);
  } catch (const NotPositiveDefinite&) {
    fallback = true;
  }
  const double s = static_cast<double>(cov.rows());
  const double trace = cov.trace();
  const double ridge = kRidgeEpsilon * (trace > 0.0 ? trace / s : 1.0);
  Matrix ridged = cov;
  ridged.diagonal().array() += ridge;
  try {
    return solve_spd(SymMatrix(ridged), rhs);
  } catch (const NotPositiveDefinite&) {
    return pseudo_inverse(SymMatrix(ridged)).matrix() * rhs;
  }
}

}  // namespace

std::string_view to_string(RuleKind kind) {
  for (const auto& [k, name] : kRuleNames)
    if (k == kind) return name;
  return "unknown";
}

RuleKind parse_rule_kind(std::string_view s) {
  for (const auto& [k, name] : kRuleNames)
    if (name == s) return k;
  throw InvalidSpec("unknown rule kind '" + std::string(s) + "'");
}

LinearRule::LinearRule(Vector weights, double intercept, RuleKind kind)
    : w_(std::move(weights)), b_(intercept), kind_(kind) {
  std::vector<Index> nz;
  for (Index j = 0; j < w_.size(); ++j)
    if (w_(j) != 0.0) nz.push_back(j);
  support_ = SupportSet(std::move(nz), w_.size());
}

LinearRule LinearRule::zero(Index p, RuleKind kind) { return LinearRule(Vector::Zero(p), 0.0, kind); }

double LinearRule::discriminant(const Vector& x) const {
  if (x.size() != w_.size())
    throw DimensionMismatch("rule has p=" + std::to_string(w_.size()) + " but x has " +
                            std::to_string(x.size()) + " entries");
  return w_.dot(x) + b_;
}

Vector LinearRule::discriminants(const Matrix& x) const {
  if (x.cols() != w_.size()) throw DimensionMismatch("feature count does not match rule");
  return (x * w_).array() + b_;
}

int predict(const LinearRule& rule, const Vector& x) { return rule.predict(x); }

LinearRule bayes_rule(const GaussianModel& model) {
  Vector w = model.beta();
  const double b = -w.dot(model.mu_a());
  return LinearRule(std::move(w), b, RuleKind::bayes);
}

LinearRule fit_lda(const LabeledDataset& d) {
  if (d.n() < 3) throw TooFewSamples("LDA needs n >= 3");
  const DiagMoments m = diag_moments(d);
  Vector w = pseudo_inverse(pooled_covariance(d)).matrix() * m.mean_diff();
  const double b = -w.dot(m.mean_avg());
  return LinearRule(std::move(w), b, RuleKind::lda);
}

LinearRule fit_lda_known_cov(const LabeledDataset& d, const CovSpec& cov) {
  const auto [mu1, mu2] = class_means(d);
  Vector w = inverse_apply(cov, mu2 - mu1);
  const double b = -w.dot(0.5 * (mu1 + mu2));
  return LinearRule(std::move(w), b, RuleKind::lda_known_cov);
}

std::vector<LinearRule> fit_hr_path(const LabeledDataset& d, std::span<const double> taus) {
  if (d.n() < 3) throw TooFewSamples("HR needs n >= 3");
  const DiagMoments m = diag_moments(d);
  const Vector t = t_statistics(m);
  const Vector coef = m.mean_diff().cwiseQuotient(floored_variances(m.pooled_var));
  const Vector center = m.mean_avg();
  std::vector<LinearRule> rules;
  rules.reserve(taus.size());
  for (double tau : taus) {
    Vector w = Vector::Zero(d.p());
    double b = 0.0;
    for (Index j = 0; j < d.p(); ++j) {
      if (std::abs(t(j)) > tau) {
        w(j) = coef(j);
        b -= coef(j) * center(j);
      }
    }
    rules.emplace_back(std::move(w), b, RuleKind::hr);
  }
  return rules;
}

LinearRule fit_hr(const LabeledDataset& d, double tau) {
  const double taus[] = {tau};
  return std::move(fit_hr_path(d, taus).front());
}

LinearRule fit_us_hr(const LabeledDataset& d, double tau, Rng& rng) {
  auto rows1 = d.class_rows(1);
  auto rows2 = d.class_rows(2);
  auto& big = rows1.size() >= rows2.size() ? rows1 : rows2;
  const auto& small = rows1.size() >= rows2.size() ? rows2 : rows1;
  if (small.size() < 2) throw TooFewSamples("under-sampling needs >= 2 rows in the smaller class");
  for (std::size_t i = 0; i < small.size(); ++i) {
    const auto j = i + static_cast<std::size_t>(rng.below(big.size() - i));
    std::swap(big[i], big[j]);
  }
  big.resize(small.size());
  std::vector<Index> rows = rows1;
  rows.insert(rows.end(), rows2.begin(), rows2.end());
  std::sort(rows.begin(), rows.end());
  const LinearRule hr = fit_hr(d.subset(rows), tau);
  return LinearRule(hr.weights(), hr.intercept(), RuleKind::us_hr);
}

SplitPlan draw_split_plan(const LabeledDataset& d, int splits, Rng& rng) {
  if (splits < 1) throw InvalidSizes("number of splits must be >= 1");
  const auto rows1 = d.class_rows(1);
  const auto rows2 = d.class_rows(2);
  SplitPlan plan;
  plan.splits.reserve(static_cast<std::size_t>(splits));
  for (int l = 0; l < splits; ++l) {
    DataSplit s;
    s.class1 = partition_class(rows1, rng);
    s.class2 = partition_class(rows2, rng);
    plan.splits.push_back(std::move(s));
  }
  return plan;
}

void validate_split_plan(const SplitPlan& plan, const LabeledDataset& d) {
  if (plan.splits.empty()) throw InvalidSizes("split plan is empty");
  const auto rows1 = d.class_rows(1);
  const auto rows2 = d.class_rows(2);
  for (const auto& s : plan.splits) {
    check_partition(s.class1, rows1);
    check_partition(s.class2, rows2);
  }
}

double bias_rbar_diag(Index n1p, Index n2p) {
  if (n1p < 1 || n2p < 1) throw InvalidSizes("split sizes must be positive");
  const double np = static_cast<double>(n1p + n2p);
  if (np <= 6.0) throw InvalidSizes("bias term needs n1' + n2' > 6");
  const double f = np / 2.0 - 1.0;
  const double gamma_ratio = std::exp(std::lgamma(f - 1.0) - std::lgamma(f));
  return f * (1.0 / static_cast<double>(n1p) - 1.0 / static_cast<double>(n2p)) * gamma_ratio;
}

double bias_rbar_general(Index n1p, Index n2p, Index s) {
  if (n1p < 1 || n2p < 1) throw InvalidSizes("split sizes must be positive");
  const Index np = n1p + n2p;
  if (s < 0 || s >= np - 3)
    throw SelectionTooLarge("kept " + std::to_string(s) + " features but need fewer than n' - 3 = " +
                            std::to_string(np - 3));
  const double diff = 1.0 / static_cast<double>(n1p) - 1.0 / static_cast<double>(n2p);
  return diff * static_cast<double>(np - 2) / static_cast<double>(np - 3 - s) *
         static_cast<double>(s);
}

double SplitPiece::evaluate(const Vector& x) const {
  double v = -correction;
  Index k = 0;
  for (Index j : selected) {
    v += coef(k) * (x(j) - center(k));
    ++k;
  }
  return v;
}

double MsplitTrace::mean_selected() const {
  if (selected_counts.empty()) return 0.0;
  double s = 0.0;
  for (Index c : selected_counts) s += static_cast<double>(c);
  return s / static_cast<double>(selected_counts.size());
}

std::vector<MsplitFit> fit_msplit_hr_diag_path(const LabeledDataset& d,
                                               std::span<const double> taus,
                                               const SplitPlan& plan,
                                               const MsplitOptions& options) {
  require_split_sizes(d);
  validate_split_plan(plan, d);
  const Index p = d.p();
  const auto [b1, b2] = bias_sizes(d, options.bias_sizes);
  const double rbar = bias_rbar_diag(b1, b2);
  const Matrix& x = d.x();
  auto states = init_path(taus.size(), p, static_cast<int>(plan.splits.size()));

  for (const auto& split : plan.splits) {
    const DiagMoments first = diag_moments(x, split.class1.part1, split.class2.part1);
    const Vector t = t_statistics(first);
    const DiagMoments second = diag_moments(x, split.class1.part2, split.class2.part2);
    const Vector coef = second.mean_diff().cwiseQuotient(floored_variances(second.pooled_var));
    const Vector center = second.mean_avg();

    for (std::size_t g = 0; g < taus.size(); ++g) {
      auto& st = states[g];
      std::vector<Index> kept;
      double piece_b = 0.0;
      for (Index j = 0; j < p; ++j) {
        if (std::abs(t(j)) > taus[g]) {
          kept.push_back(j);
          st.w(j) += coef(j);
          piece_b -= coef(j) * center(j);
          ++st.trace.frequency[static_cast<std::size_t>(j)];
        }
      }
      const auto s = static_cast<Index>(kept.size());
      const double correction = options.bias_correction ? static_cast<double>(s) * rbar / 2.0 : 0.0;
      st.b += piece_b - correction;
      st.trace.selected_counts.push_back(s);
      if (options.keep_pieces) {
        Vector kc(s), kz(s);
        for (Index k = 0; k < s; ++k) {
          kc(k) = coef(kept[static_cast<std::size_t>(k)]);
          kz(k) = center(kept[static_cast<std::size_t>(k)]);
        }
        SplitPiece piece = make_piece(std::move(kept), kc, kz, p);
        piece.rbar = rbar;
        piece.correction = correction;
        st.trace.pieces.push_back(std::move(piece));
      }
    }
  }
  return finish_path(states, RuleKind::msplit_hr_diag);
}

MsplitFit fit_msplit_hr_diag(const LabeledDataset& d, double tau, const SplitPlan& plan,
                             const MsplitOptions& options) {
  const double taus[] = {tau};
  return std::move(fit_msplit_hr_diag_path(d, taus, plan, options).front());
}

MsplitFit fit_msplit_hr_diag(const LabeledDataset& d, double tau, const MsplitOptions& options,
                             Rng& rng) {
  require_split_sizes(d);
  return fit_msplit_hr_diag(d, tau, draw_split_plan(d, options.splits, rng), options);
}

std::vector<MsplitFit> fit_msplit_hr_general_path(const LabeledDataset& d,
                                                  std::span<const double> taus,
                                                  const SplitPlan& plan,
                                                  const MsplitOptions& options) {
  require_split_sizes(d);
  validate_split_plan(plan, d);
  const Index p = d.p();
  const Index n1p = d.n1() / 2;
  const Index n2p = d.n2() / 2;
  const Index np = n1p + n2p;
  if (np < 8) throw InvalidSizes("general split rule needs n1' + n2' >= 8");
  const Index cap = np - 4;
  const auto [b1, b2] = bias_sizes(d, options.bias_sizes);
  const Matrix& x = d.x();
  auto states = init_path(taus.size(), p, static_cast<int>(plan.splits.size()));

  std::vector<Index> order(static_cast<std::size_t>(p));
  for (const auto& split : plan.splits) {
    const Vector md =
        mean_of_rows(x, split.class2.part1) - mean_of_rows(x, split.class1.part1);
    std::iota(order.begin(), order.end(), Index{0});
    std::stable_sort(order.begin(), order.end(),
                     [&](Index a, Index b) { return std::abs(md(a)) > std::abs(md(b)); });

    // Every screened set is a prefix of `order`, so one part-2 covariance on the
    // longest prefix serves all thresholds through its leading blocks.
    std::vector<Index> kept_size(taus.size());
    Index longest = 0;
    for (std::size_t g = 0; g < taus.size(); ++g) {
      Index c = 0;
      for (Index j = 0; j < p; ++j)
        if (std::abs(md(j)) > taus[g]) ++c;
      kept_size[g] = c < np - 3 ? c : cap;
      longest = std::max(longest, kept_size[g]);
    }
    std::vector<Index> feats(order.begin(), order.begin() + longest);
    Vector mdt, mat;
    Matrix cov;
    if (longest > 0) {
      const Vector m1 = mean_of_rows(x, split.class1.part2);
      const Vector m2 = mean_of_rows(x, split.class2.part2);
      mdt.resize(longest);
      mat.resize(longest);
      for (Index k = 0; k < longest; ++k) {
        const Index j = feats[static_cast<std::size_t>(k)];
        mdt(k) = m2(j) - m1(j);
        mat(k) = 0.5 * (m1(j) + m2(j));
      }
      cov = pooled_covariance(x, split.class1.part2, split.class2.part2, feats).matrix();
    }

    for (std::size_t g = 0; g < taus.size(); ++g) {
      auto& st = states[g];
      const Index s = kept_size[g];
      st.trace.selected_counts.push_back(s);
      if (s == 0) {
        if (options.keep_pieces) st.trace.pieces.push_back(SplitPiece{});
        continue;
      }
      bool fallback = false;
      const Vector beta = solve_kept_block(cov.topLeftCorner(s, s), mdt.head(s), fallback);
      const double rbar = bias_rbar_general(b1, b2, s);
      const double correction = options.bias_correction ? rbar / 2.0 : 0.0;
      for (Index k = 0; k < s; ++k) {
        const Index j = feats[static_cast<std::size_t>(k)];
        st.w(j) += beta(k);
        ++st.trace.frequency[static_cast<std::size_t>(j)];
      }
      st.b += -beta.dot(mat.head(s)) - correction;
      if (fallback) ++st.trace.ridge_fallbacks;
      if (options.keep_pieces) {
        SplitPiece piece = make_piece(std::vector<Index>(feats.begin(), feats.begin() + s), beta,
                                      mat.head(s), p);
        piece.rbar = rbar;
        piece.correction = correction;
        piece.ridge_fallback = fallback;
        st.trace.pieces.push_back(std::move(piece));
      }
    }
  }
  return finish_path(states, RuleKind::msplit_hr_general);
}

MsplitFit fit_msplit_hr_general(const LabeledDataset& d, double tau, const SplitPlan& plan,
                                const MsplitOptions& options) {
  const double taus[] = {tau};
  return std::move(fit_msplit_hr_general_path(d, taus, plan, options).front());
}

MsplitFit fit_msplit_hr_general(const LabeledDataset& d, double tau,
                                const MsplitOptions& options, Rng& rng) {
  require_split_sizes(d);
  return fit_msplit_hr_general(d, tau, draw_split_plan(d, options.splits, rng), options);
}

LinearRule fit_slda(const LabeledDataset& d, double m1, double m2, double alpha) {
  if (d.n() < 3) throw TooFewSamples("SLDA needs n >= 3");
  const Vector mu_d = slda_threshold_meandiff(d, m2, alpha);
  const Vector mu_a = diag_moments(d).mean_avg();
  if (mu_d.isZero(0.0)) return LinearRule::zero(d.p(), RuleKind::slda);
  Vector w = pseudo_inverse(slda_threshold_cov(d, m1)).matrix() * mu_d;
  const double b = -w.dot(mu_a);
  return LinearRule(std::move(w), b, RuleKind::slda);
}

}  // namespace simlab
