#include <gtest/gtest.h>

#include <cmath>
#include <limits>

#include "fixtures.hpp"
#include "simlab/classifiers.hpp"
#include "simlab/datagen.hpp"
#include "simlab/errors.hpp"
#include "simlab/eval.hpp"
#include "simlab/tuning.hpp"

namespace simlab {
namespace {

using testing::ds4;
constexpr double kInf = std::numeric_limits<double>::infinity();

Vector vec(std::initializer_list<double> v) {
  Vector out(static_cast<Index>(v.size()));
  Index i = 0;
  for (double x : v) out(i++) = x;
  return out;
}

TEST(BayesRule, SymmetricMeans) {
  const GaussianModel m(vec({-0.5, 0}), vec({0.5, 0}), DiagonalCov{{1.0, 1.0}});
  const LinearRule r = bayes_rule(m);
  EXPECT_TRUE(r.weights().isApprox(vec({1, 0})));
  EXPECT_NEAR(r.intercept(), 0.0, 1e-15);
}

TEST(BayesRule, SettingOne) {
  const GaussianModel m = make_setting(SettingId::i, 1000);
  const LinearRule r = bayes_rule(m);
  EXPECT_NEAR(r.weights()(0), 1.0 / 2.25, 1e-14);
  EXPECT_NEAR(r.weights()(1), 1.2 / 0.5625, 1e-14);
  EXPECT_EQ(r.support().size(), 2u);
  EXPECT_NEAR(r.intercept(), -r.weights().dot(m.mu_a()), 1e-12);
}

TEST(BayesRule, NoSignalSendsEverythingToClassTwo) {
  const GaussianModel m(vec({1, 2}), vec({1, 2}), DiagonalCov{{1.0, 1.0}});
  const LinearRule r = bayes_rule(m);
  EXPECT_TRUE(r.weights().isZero());
  EXPECT_EQ(r.intercept(), 0.0);
  EXPECT_EQ(r.predict(vec({-100, 100})), 2);
}

TEST(Predict, Conventions) {
  EXPECT_EQ(LinearRule::zero(3).predict(vec({1, 2, 3})), 2);
  const GaussianModel m = make_setting(SettingId::i, 10);
  const LinearRule r = bayes_rule(m);
  EXPECT_EQ(predict(r, m.mu1()), 1);
  EXPECT_EQ(predict(r, m.mu2()), 2);
  EXPECT_NEAR(r.discriminant(m.mu_a()), 0.0, 1e-12);
  const LinearRule exact_tie(vec({1.0, 0.0}), -2.0, RuleKind::hr);
  EXPECT_EQ(exact_tie.predict(vec({2.0, 7.0})), 2);
  EXPECT_THROW(r.predict(vec({1, 2})), DimensionMismatch);
}

TEST(FitLda, Ds4UsesPseudoInverse) {
  const LinearRule r = fit_lda(ds4());
  EXPECT_NEAR(r.weights()(0), 0.96, 1e-12);
  EXPECT_NEAR(r.weights()(1), 0.48, 1e-12);
  EXPECT_NEAR(r.intercept(), -2.64, 1e-12);
}

TEST(FitLda, OneFeatureSign) {
  Matrix x(6, 1);
  x << -3, -2.5, -3.2, 4, 4.4, 3.9;
  const LinearRule r = fit_lda(LabeledDataset(x, {1, 1, 1, 2, 2, 2}));
  EXPECT_GT(r.weights()(0), 0.0);
}

TEST(FitLda, DuplicatedRowsKeepPredictions) {
  Rng rng(17);
  const auto d = testing::shifted_data(12, 6, 4, 2, 1.5, rng);
  std::vector<Index> twice;
  for (Index i = 0; i < d.n(); ++i) {
    twice.push_back(i);
    twice.push_back(i);
  }
  const LinearRule a = fit_lda(d);
  const LinearRule b = fit_lda(d.subset(twice));
  const Matrix test = testing::random_matrix(200, 4, rng) * 2.0;
  for (Index i = 0; i < test.rows(); ++i)
    EXPECT_EQ(a.predict(test.row(i).transpose()), b.predict(test.row(i).transpose()));
}

TEST(FitLda, TooFew) {
  Matrix x(2, 1);
  x << 0, 1;
  EXPECT_THROW(fit_lda(LabeledDataset(x, {1, 2})), TooFewSamples);
}

TEST(FitHr, Ds4) {
  const LinearRule r = fit_hr(ds4(), 1.0);
  EXPECT_NEAR(r.weights()(0), 1.5, 1e-14);
  EXPECT_EQ(r.weights()(1), 0.0);
  EXPECT_NEAR(r.intercept(), -3.75, 1e-14);
  EXPECT_NEAR(r.discriminant(vec({0, 9})), -3.75, 1e-14);
  EXPECT_EQ(r.predict(vec({0, 9})), 1);
}

TEST(FitHr, ExtremeThresholds) {
  Rng rng(2);
  const auto d = testing::shifted_data(15, 8, 6, 2, 1.0, rng);
  const LinearRule none = fit_hr(d, kInf);
  EXPECT_TRUE(none.weights().isZero());
  EXPECT_EQ(none.intercept(), 0.0);

  const LinearRule all = fit_hr(d, 0.0);
  const DiagMoments m = diag_moments(d);
  const Vector w = m.mean_diff().cwiseQuotient(m.pooled_var);
  EXPECT_TRUE(all.weights().isApprox(w, 1e-13));
  EXPECT_NEAR(all.intercept(), -w.dot(m.mean_avg()), 1e-12);
}

TEST(FitHr, PathMatchesPointFits) {
  Rng rng(6);
  const auto d = testing::shifted_data(20, 9, 30, 3, 1.0, rng);
  const std::vector<double> taus{0.0, 0.5, 1.0, 2.0, 3.5, kInf};
  const auto path = fit_hr_path(d, taus);
  for (std::size_t g = 0; g < taus.size(); ++g) {
    const LinearRule one = fit_hr(d, taus[g]);
    EXPECT_TRUE(path[g].weights() == one.weights());
    EXPECT_EQ(path[g].intercept(), one.intercept());
  }
}

TEST(FitUsHr, BalancedClassesReproduceHr) {
  Rng rng(1);
  const auto d = testing::shifted_data(10, 10, 8, 2, 1.0, rng);
  Rng r2(99);
  const LinearRule us = fit_us_hr(d, 0.5, r2);
  const LinearRule hr = fit_hr(d, 0.5);
  EXPECT_TRUE(us.weights() == hr.weights());
  EXPECT_EQ(us.intercept(), hr.intercept());
}

TEST(FitUsHr, Deterministic) {
  Rng rng(1);
  const auto d = testing::shifted_data(30, 6, 8, 2, 1.0, rng);
  Rng a(5), b(5);
  const LinearRule ra = fit_us_hr(d, 1.0, a);
  const LinearRule rb = fit_us_hr(d, 1.0, b);
  EXPECT_TRUE(ra.weights() == rb.weights());
  EXPECT_EQ(ra.intercept(), rb.intercept());
}

TEST(FitUsHr, ReducesClassImbalanceOfErrors) {
  const GaussianModel model = make_setting(SettingId::i, 200);
  const GaussianSampler sampler(model);
  double gap_us = 0.0, gap_hr = 0.0;
  for (int r = 0; r < 200; ++r) {
    Rng rng(derive_seed(31, {static_cast<std::uint64_t>(r)}));
    const auto d = sampler.sample(50, 10, rng);
    const auto hr = theoretical_mcr(fit_hr(d, 2.5), model);
    const auto us = theoretical_mcr(fit_us_hr(d, 2.5, rng), model);
    gap_hr += std::abs(hr.mcr1 - hr.mcr2);
    gap_us += std::abs(us.mcr1 - us.mcr2);
  }
  EXPECT_LT(gap_us, gap_hr);
}

TEST(BiasTerms, Diagonal) {
  EXPECT_EQ(bias_rbar_diag(10, 10), 0.0);
  EXPECT_NEAR(bias_rbar_diag(25, 5), -0.1723077, 1e-7);
  EXPECT_NEAR(bias_rbar_diag(50, 5), -0.1870588, 1e-7);
  EXPECT_LT(bias_rbar_diag(20, 4), 0.0);
  EXPECT_THROW(bias_rbar_diag(3, 3), InvalidSizes);
}

TEST(BiasTerms, General) {
  EXPECT_EQ(bias_rbar_general(25, 5, 0), 0.0);
  EXPECT_NEAR(bias_rbar_general(25, 5, 4), -0.7791304, 1e-7);
  EXPECT_EQ(bias_rbar_general(8, 8, 5), 0.0);
  EXPECT_THROW(bias_rbar_general(25, 5, 27), SelectionTooLarge);
  EXPECT_NO_THROW(bias_rbar_general(25, 5, 26));
}

TEST(SplitPlan, PartitionsEachClass) {
  Rng rng(3);
  const auto d = testing::shifted_data(11, 7, 3, 1, 1.0, rng);
  const SplitPlan plan = draw_split_plan(d, 5, rng);
  ASSERT_EQ(plan.splits.size(), 5u);
  for (const auto& s : plan.splits) {
    EXPECT_EQ(s.class1.part1.size(), 5u);
    EXPECT_EQ(s.class1.part2.size(), 6u);
    EXPECT_EQ(s.class2.part1.size(), 3u);
    EXPECT_EQ(s.class2.part2.size(), 4u);
  }
  EXPECT_NO_THROW(validate_split_plan(plan, d));
  SplitPlan bad = plan;
  std::swap(bad.splits[0].class1.part1, bad.splits[0].class1.part2);
  EXPECT_THROW(validate_split_plan(bad, d), InvalidSizes);
  EXPECT_THROW(draw_split_plan(d, 0, rng), InvalidSizes);
}

TEST(SplitPlan, ShorterPlansArePrefixes) {
  Rng rng(3);
  const auto d = testing::shifted_data(11, 7, 3, 1, 1.0, rng);
  Rng a(77), b(77);
  const SplitPlan small = draw_split_plan(d, 4, a);
  const SplitPlan large = draw_split_plan(d, 9, b);
  for (std::size_t l = 0; l < 4; ++l) {
    EXPECT_EQ(small.splits[l].class1.part1, large.splits[l].class1.part1);
    EXPECT_EQ(small.splits[l].class2.part1, large.splits[l].class2.part1);
  }
}

MsplitOptions opts(int splits, bool correct = true) {
  MsplitOptions o;
  o.splits = splits;
  o.bias_correction = correct;
  return o;
}

TEST(MsplitDiag, SingleBalancedSplitIsDiagonalLdaOnPartTwo) {
  Rng rng(4);
  const auto d = testing::shifted_data(10, 10, 5, 2, 1.0, rng);
  const SplitPlan plan = draw_split_plan(d, 1, rng);
  const MsplitFit fit = fit_msplit_hr_diag(d, 0.0, plan, opts(1));
  const auto& s = plan.splits[0];
  const DiagMoments m = diag_moments(d.x(), s.class1.part2, s.class2.part2);
  const Vector w = m.mean_diff().cwiseQuotient(m.pooled_var);
  EXPECT_LE((fit.rule.weights() - w).norm(), 1e-12);
  EXPECT_NEAR(fit.rule.intercept(), -w.dot(m.mean_avg()), 1e-12);
}

TEST(MsplitDiag, NothingSelectedGivesZeroRule) {
  Rng rng(4);
  const auto d = testing::shifted_data(20, 10, 5, 2, 1.0, rng);
  const MsplitFit fit = fit_msplit_hr_diag(d, kInf, opts(7), rng);
  EXPECT_TRUE(fit.rule.weights().isZero());
  EXPECT_EQ(fit.rule.intercept(), 0.0);
  EXPECT_EQ(fit.rule.predict(Vector::Zero(5)), 2);
}

TEST(MsplitDiag, TooFewRows) {
  Rng rng(4);
  const auto d = testing::shifted_data(20, 3, 5, 2, 1.0, rng);
  EXPECT_THROW(fit_msplit_hr_diag(d, 1.0, opts(3), rng), TooFewSamples);
}

void expect_collapse_identity(const LabeledDataset& d, const MsplitFit& fit, Rng& rng) {
  ASSERT_EQ(static_cast<int>(fit.trace.pieces.size()), fit.trace.splits);
  for (int k = 0; k < 100; ++k) {
    const Vector x = testing::random_matrix(d.p(), 1, rng) * 2.0;
    double mean = 0.0;
    for (const auto& piece : fit.trace.pieces) mean += piece.evaluate(x);
    mean /= static_cast<double>(fit.trace.pieces.size());
    EXPECT_NEAR(fit.rule.discriminant(x), mean, 1e-10 * (1.0 + std::abs(mean)));
  }
}

TEST(MsplitDiag, CollapsedRuleIsMeanOfSplitRules) {
  const GaussianModel model = make_setting(SettingId::i, 1000);
  Rng rng(2024);
  const auto d = sample_dataset(model, 50, 10, rng);
  const auto grid = make_path_grid(d, GridKind::t_scale, 30, 20);
  const double tau = loocv_select_path(d, msplit_diag_path_fitter(10), grid, 5).tau_star;
  for (double t : {tau, 0.0, 1.5}) {
    const MsplitFit fit = fit_msplit_hr_diag(d, t, opts(30), rng);
    expect_collapse_identity(d, fit, rng);
  }
}

TEST(MsplitGeneral, CollapsedRuleIsMeanOfSplitRules) {
  const GaussianModel model = make_setting(SettingId::iv, 500);
  Rng rng(2025);
  const auto d = sample_dataset(model, 50, 10, rng);
  for (double t : {0.0, 0.8, 1.5}) {
    const MsplitFit fit = fit_msplit_hr_general(d, t, opts(30), rng);
    expect_collapse_identity(d, fit, rng);
    for (Index s : fit.trace.selected_counts) EXPECT_LE(s, 25 + 5 - 4);
  }
}

TEST(MsplitGeneral, SingleBalancedSplitIsLdaOnPartTwo) {
  Rng rng(8);
  const auto d = testing::shifted_data(8, 8, 2, 1, 1.0, rng);
  const SplitPlan plan = draw_split_plan(d, 1, rng);
  const MsplitFit fit = fit_msplit_hr_general(d, 0.0, plan, opts(1));
  const auto& s = plan.splits[0];
  std::vector<Index> rows = s.class1.part2;
  rows.insert(rows.end(), s.class2.part2.begin(), s.class2.part2.end());
  const LinearRule lda = fit_lda(d.subset(rows));
  EXPECT_LE((fit.rule.weights() - lda.weights()).norm(), 1e-10);
  EXPECT_NEAR(fit.rule.intercept(), lda.intercept(), 1e-10);
}

TEST(MsplitGeneral, HugeThresholdGivesZeroRule) {
  Rng rng(8);
  const auto d = testing::shifted_data(20, 10, 6, 1, 1.0, rng);
  const MsplitFit fit = fit_msplit_hr_general(d, 1e9, opts(5), rng);
  EXPECT_TRUE(fit.rule.weights().isZero());
  EXPECT_EQ(fit.rule.predict(Vector::Ones(6)), 2);
}

TEST(MsplitGeneral, CollinearFeaturesFallBackToRidge) {
  Rng rng(8);
  auto base = testing::shifted_data(20, 10, 3, 2, 1.5, rng);
  Matrix x(base.n(), 4);
  x << base.x(), base.x().col(0);
  const LabeledDataset d(x, base.y());
  const MsplitFit fit = fit_msplit_hr_general(d, 0.0, opts(4), rng);
  EXPECT_GT(fit.trace.ridge_fallbacks, 0);
  EXPECT_TRUE(fit.rule.weights().allFinite());
}

TEST(Msplit, CorrectionRaisesDiscriminantForMinorityClassTwo) {
  const GaussianModel model = make_setting(SettingId::i, 300);
  Rng rng(44);
  const auto d = sample_dataset(model, 40, 10, rng);
  const SplitPlan plan = draw_split_plan(d, 10, rng);
  for (double tau : {1.0, 2.0, 3.0}) {
    const auto c = fit_msplit_hr_diag(d, tau, plan, opts(10, true));
    const auto u = fit_msplit_hr_diag(d, tau, plan, opts(10, false));
    EXPECT_TRUE(c.rule.weights() == u.rule.weights());
    if (c.trace.mean_selected() > 0) EXPECT_GT(c.rule.intercept(), u.rule.intercept());
    EXPECT_NEAR(c.rule.intercept() - u.rule.intercept(),
                -bias_rbar_diag(20, 5) / 2.0 * c.trace.mean_selected(), 1e-10);
  }
}

TEST(Msplit, SeedDeterminism) {
  const GaussianModel model = make_setting(SettingId::iv, 100);
  Rng data_rng(1);
  const auto d = sample_dataset(model, 30, 10, data_rng);
  Rng a(9), b(9);
  const auto fa = fit_msplit_hr_diag(d, 1.0, opts(12), a);
  const auto fb = fit_msplit_hr_diag(d, 1.0, opts(12), b);
  EXPECT_TRUE(fa.rule.weights() == fb.rule.weights());
  EXPECT_EQ(fa.rule.intercept(), fb.rule.intercept());
  Rng c(9), e(9);
  const auto ga = fit_msplit_hr_general(d, 0.5, opts(12), c);
  const auto gb = fit_msplit_hr_general(d, 0.5, opts(12), e);
  EXPECT_TRUE(ga.rule.weights() == gb.rule.weights());
  EXPECT_EQ(ga.rule.intercept(), gb.rule.intercept());
}

TEST(Msplit, PermutationInvariantGivenPlan) {
  Rng rng(10);
  const auto d = testing::shifted_data(16, 10, 12, 3, 1.0, rng);
  const SplitPlan plan = draw_split_plan(d, 6, rng);
  // Reverse rows within each class; new row i holds old row perm[i].
  std::vector<Index> perm;
  for (Index i = 15; i >= 0; --i) perm.push_back(i);
  for (Index i = 25; i >= 16; --i) perm.push_back(i);
  std::vector<Index> inverse(perm.size());
  for (std::size_t i = 0; i < perm.size(); ++i) inverse[static_cast<std::size_t>(perm[i])] = static_cast<Index>(i);
  const LabeledDataset permuted = d.subset(perm);
  SplitPlan mapped = plan;
  for (auto& s : mapped.splits)
    for (auto* part : {&s.class1.part1, &s.class1.part2, &s.class2.part1, &s.class2.part2})
      for (auto& idx : *part) idx = inverse[static_cast<std::size_t>(idx)];
  for (bool general : {false, true}) {
    const auto a = general ? fit_msplit_hr_general(d, 0.7, plan, opts(6))
                           : fit_msplit_hr_diag(d, 0.7, plan, opts(6));
    const auto b = general ? fit_msplit_hr_general(permuted, 0.7, mapped, opts(6))
                           : fit_msplit_hr_diag(permuted, 0.7, mapped, opts(6));
    EXPECT_LE((a.rule.weights() - b.rule.weights()).norm(), 1e-12);
    EXPECT_NEAR(a.rule.intercept(), b.rule.intercept(), 1e-12);
    EXPECT_EQ(a.trace.frequency, b.trace.frequency);
  }
}

TEST(Msplit, PathMatchesPointFits) {
  const GaussianModel model = make_setting(SettingId::iv, 50);
  Rng rng(12);
  const auto d = sample_dataset(model, 30, 12, rng);
  const SplitPlan plan = draw_split_plan(d, 8, rng);
  const std::vector<double> taus{0.0, 0.4, 1.0, 2.0};
  const auto diag = fit_msplit_hr_diag_path(d, taus, plan, opts(8));
  const auto gen = fit_msplit_hr_general_path(d, taus, plan, opts(8));
  for (std::size_t g = 0; g < taus.size(); ++g) {
    const auto a = fit_msplit_hr_diag(d, taus[g], plan, opts(8));
    const auto b = fit_msplit_hr_general(d, taus[g], plan, opts(8));
    EXPECT_LE((diag[g].rule.weights() - a.rule.weights()).norm(), 1e-12);
    EXPECT_NEAR(diag[g].rule.intercept(), a.rule.intercept(), 1e-12);
    EXPECT_LE((gen[g].rule.weights() - b.rule.weights()).norm(), 1e-10);
    EXPECT_NEAR(gen[g].rule.intercept(), b.rule.intercept(), 1e-10);
  }
}

TEST(FitSlda, NoThresholdsFollowsLdaDirection) {
  Rng rng(13);
  const auto d = testing::shifted_data(15, 10, 4, 2, 1.0, rng);
  const LinearRule s = fit_slda(d, 1e-12, 1e-12, 0.3);
  const LinearRule l = fit_lda(d);
  const double ratio = s.weights()(0) / l.weights()(0);
  EXPECT_NEAR(ratio, 1.0 / (1.0 - 2.0 / 25.0), 1e-10);
  EXPECT_LE((s.weights() - ratio * l.weights()).norm(), 1e-10 * s.weights().norm());
}

TEST(FitSlda, Examples) {
  const auto d = ds4();
  EXPECT_TRUE(fit_slda(d, 1.0, 1e6, 0.3).weights().isZero());
  // covariance threshold 0.6 keeps only the (1,1) entry 1.0; mean threshold 1 keeps 3
  const double m1 = 0.6 / std::sqrt(std::log(2.0) / 4.0);
  const double m2 = 1.0 / std::pow(std::log(2.0) / 4.0, 0.3);
  const LinearRule r = fit_slda(d, m1, m2, 0.3);
  EXPECT_NEAR(r.weights()(0), 3.0, 1e-12);
  EXPECT_EQ(r.weights()(1), 0.0);
  EXPECT_NEAR(r.intercept(), -3.0 * 2.5, 1e-12);
}

}  // namespace
}  // namespace simlab
