#include "simlab/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simlab/errors.hpp"

namespace simlab {

LabeledDataset::LabeledDataset(Matrix x, std::vector<int> y) : x_(std::move(x)), y_(std::move(y)) {
  if (static_cast<Index>(y_.size()) != x_.rows())
    throw DimensionMismatch("label count does not match row count");
  if (x_.cols() < 1) throw InvalidDimension("dataset needs at least one feature");
  for (std::size_t i = 0; i < y_.size(); ++i) {
    if (y_[i] == 1) {
      ++n1_;
    } else if (y_[i] == 2) {
      ++n2_;
    } else {
      throw LabelError("label " + std::to_string(y_[i]) + " at row " + std::to_string(i + 1) +
                       " is not in {1, 2}");
    }
  }
  if (n1_ == 0 || n2_ == 0) throw EmptyClass("both classes need at least one sample");
}

std::vector<Index> LabeledDataset::class_rows(int label) const {
  std::vector<Index> rows;
  rows.reserve(static_cast<std::size_t>(label == 1 ? n1_ : n2_));
  for (std::size_t i = 0; i < y_.size(); ++i)
    if (y_[i] == label) rows.push_back(static_cast<Index>(i));
  return rows;
}

LabeledDataset LabeledDataset::subset(std::span<const Index> rows) const {
  Matrix sx(static_cast<Index>(rows.size()), p());
  std::vector<int> sy(rows.size());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    sx.row(static_cast<Index>(r)) = x_.row(rows[r]);
    sy[r] = y_[static_cast<std::size_t>(rows[r])];
  }
  return LabeledDataset(std::move(sx), std::move(sy));
}

SupportSet::SupportSet(std::vector<Index> indices, Index p) : indices_(std::move(indices)) {
  std::sort(indices_.begin(), indices_.end());
  if (std::adjacent_find(indices_.begin(), indices_.end()) != indices_.end())
    throw InvalidSpec("support set has duplicate indices");
  if (!indices_.empty() && (indices_.front() < 0 || indices_.back() >= p))
    throw InvalidSpec("support index out of range");
}

bool SupportSet::contains(Index j) const {
  return std::binary_search(indices_.begin(), indices_.end(), j);
}

Vector mean_of_rows(const Matrix& x, std::span<const Index> rows) {
  if (rows.empty()) throw EmptyClass("cannot average an empty class");
  Vector sum = Vector::Zero(x.cols());
  for (Index r : rows) sum += x.row(r).transpose();
  return sum / static_cast<double>(rows.size());
}

DiagMoments diag_moments(const Matrix& x, std::span<const Index> rows1,
                         std::span<const Index> rows2) {
  if (rows1.empty() || rows2.empty()) throw EmptyClass("both classes need at least one sample");
  const Index n = static_cast<Index>(rows1.size() + rows2.size());
  if (n < 3) throw TooFewSamples("pooled variance needs n >= 3");
  DiagMoments m;
  m.n1 = static_cast<Index>(rows1.size());
  m.n2 = static_cast<Index>(rows2.size());
  m.mean1 = mean_of_rows(x, rows1);
  m.mean2 = mean_of_rows(x, rows2);
  Vector ss = Vector::Zero(x.cols());
  for (Index r : rows1) ss += (x.row(r).transpose() - m.mean1).cwiseAbs2();
  for (Index r : rows2) ss += (x.row(r).transpose() - m.mean2).cwiseAbs2();
  m.pooled_var = ss / static_cast<double>(n - 2);
  return m;
}

DiagMoments diag_moments(const LabeledDataset& d) {
  const auto r1 = d.class_rows(1);
  const auto r2 = d.class_rows(2);
  return diag_moments(d.x(), r1, r2);
}

std::pair<Vector, Vector> class_means(const LabeledDataset& d) {
  const auto r1 = d.class_rows(1);
  const auto r2 = d.class_rows(2);
  return {mean_of_rows(d.x(), r1), mean_of_rows(d.x(), r2)};
}

SymMatrix pooled_covariance(const Matrix& x, std::span<const Index> rows1,
                            std::span<const Index> rows2, std::span<const Index> features) {
  if (rows1.empty() || rows2.empty()) throw EmptyClass("both classes need at least one sample");
  const Index n = static_cast<Index>(rows1.size() + rows2.size());
  if (n < 3) throw TooFewSamples("pooled covariance needs n >= 3");
  const Index s = static_cast<Index>(features.size());
  if (s == 0) throw InvalidDimension("pooled covariance needs at least one feature");
  Matrix centered(n, s);
  Index row = 0;
  for (auto rows : {rows1, rows2}) {
    Vector mean = Vector::Zero(s);
    for (Index r : rows)
      for (Index k = 0; k < s; ++k) mean(k) += x(r, features[static_cast<std::size_t>(k)]);
    mean /= static_cast<double>(rows.size());
    for (Index r : rows) {
      for (Index k = 0; k < s; ++k)
        centered(row, k) = x(r, features[static_cast<std::size_t>(k)]) - mean(k);
      ++row;
    }
  }
  Matrix cov = Matrix::Zero(s, s);
  cov.selfadjointView<Eigen::Lower>().rankUpdate(centered.transpose(), 1.0 / static_cast<double>(n - 2));
  return SymMatrix(Matrix(cov.selfadjointView<Eigen::Lower>()));
}

SymMatrix pooled_covariance(const LabeledDataset& d) {
  if (d.n() < 3) throw TooFewSamples("pooled covariance needs n >= 3");
  std::vector<Index> all(static_cast<std::size_t>(d.p()));
  for (Index j = 0; j < d.p(); ++j) all[static_cast<std::size_t>(j)] = j;
  const auto r1 = d.class_rows(1);
  const auto r2 = d.class_rows(2);
  return pooled_covariance(d.x(), r1, r2, all);
}

Vector pooled_diag_variances(const LabeledDataset& d) {
  if (d.n() < 3) throw TooFewSamples("pooled variance needs n >= 3");
  return diag_moments(d).pooled_var;
}

MomentEstimates estimate_moments(const LabeledDataset& d, bool full_covariance) {
  const DiagMoments m = diag_moments(d);
  MomentEstimates e;
  e.mu1_hat = m.mean1;
  e.mu2_hat = m.mean2;
  e.mu_d_hat = m.mean_diff();
  e.mu_a_hat = m.mean_avg();
  e.diag_var = m.pooled_var;
  if (full_covariance) e.sigma_hat = pooled_covariance(d);
  e.n1 = m.n1;
  e.n2 = m.n2;
  return e;
}

Vector t_statistics(const DiagMoments& m) {
  const double n = static_cast<double>(m.n1 + m.n2);
  const double scale = std::sqrt(n / (static_cast<double>(m.n1) * static_cast<double>(m.n2)));
  Vector t(m.mean1.size());
  for (Index j = 0; j < t.size(); ++j) {
    const double diff = m.mean2(j) - m.mean1(j);
    const double var = m.pooled_var(j);
    if (var > 0.0) {
      t(j) = diff / (std::sqrt(var) * scale);
    } else {
      t(j) = diff == 0.0 ? 0.0 : kSelectAlways;
    }
  }
  return t;
}

Vector t_statistics(const LabeledDataset& d) {
  if (d.n() < 3) throw TooFewSamples("t statistics need n >= 3");
  return t_statistics(diag_moments(d));
}

namespace {

SupportSet select_above(const Vector& v, double tau) {
  std::vector<Index> out;
  for (Index j = 0; j < v.size(); ++j)
    if (std::abs(v(j)) > tau) out.push_back(j);
  return SupportSet(std::move(out), v.size());
}

}  // namespace

SupportSet select_by_t(const Vector& t, double tau) { return select_above(t, tau); }

SupportSet select_by_meandiff(const Vector& mu_d_hat, double tau) {
  return select_above(mu_d_hat, tau);
}

SymMatrix slda_threshold_cov(const LabeledDataset& d, double m1) {
  if (d.n() < 3) throw TooFewSamples("thresholded covariance needs n >= 3");
  const double n = static_cast<double>(d.n());
  const double p = static_cast<double>(d.p());
  const double threshold = m1 * std::sqrt(std::log(p) / n);
  Matrix scaled = (1.0 - 2.0 / n) * pooled_covariance(d).matrix();
  for (Index i = 0; i < scaled.rows(); ++i)
    for (Index j = 0; j < scaled.cols(); ++j)
      if (!(std::abs(scaled(i, j)) > threshold)) scaled(i, j) = 0.0;
  return SymMatrix(scaled);
}

Vector slda_threshold_meandiff(const LabeledDataset& d, double m2, double alpha) {
  const double n = static_cast<double>(d.n());
  const double p = static_cast<double>(d.p());
  const double threshold = m2 * std::pow(std::log(p) / n, alpha);
  const auto [mu1, mu2] = class_means(d);
  Vector mu_d = mu2 - mu1;
  for (Index j = 0; j < mu_d.size(); ++j)
    if (!(std::abs(mu_d(j)) > threshold)) mu_d(j) = 0.0;
  return mu_d;
}

}  // namespace simlab
