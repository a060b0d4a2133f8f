#include "simlab/datagen.hpp"

#include <algorithm>
#include <string>

#include "simlab/errors.hpp"

namespace simlab {

GaussianModel::GaussianModel(Vector mu1, Vector mu2, CovSpec cov)
    : mu1_(std::move(mu1)), mu2_(std::move(mu2)), cov_(std::move(cov)) {
  if (mu1_.size() != mu2_.size()) throw DimensionMismatch("class means have different lengths");
  if (mu1_.size() < 1) throw InvalidDimension("model needs p >= 1");
  validate_cov(cov_, mu1_.size());
}

Vector GaussianModel::beta() const { return inverse_apply(cov_, mu_d()); }

SupportSet GaussianModel::active_set() const {
  const Vector v = is_diagonal(cov_) ? mu_d() : beta();
  const double cutoff = is_diagonal(cov_) ? 0.0 : 1e-12 * v.cwiseAbs().maxCoeff();
  std::vector<Index> idx;
  for (Index j = 0; j < v.size(); ++j)
    if (std::abs(v(j)) > cutoff) idx.push_back(j);
  return SupportSet(std::move(idx), p());
}

SettingId parse_setting_id(std::string_view s) {
  if (s == "i") return SettingId::i;
  if (s == "ii") return SettingId::ii;
  if (s == "iii") return SettingId::iii;
  if (s == "iv") return SettingId::iv;
  throw InvalidSpec("unknown setting '" + std::string(s) + "' (expected i, ii, iii or iv)");
}

std::string to_string(SettingId id) {
  switch (id) {
    case SettingId::i: return "i";
    case SettingId::ii: return "ii";
    case SettingId::iii: return "iii";
    case SettingId::iv: return "iv";
  }
  return "?";
}

GaussianModel make_setting(SettingId id, Index p, SettingOptions options) {
  auto require = [&](bool ok, const char* what) {
    if (!ok) throw InvalidDimension(std::string("setting ") + to_string(id) + ": " + what);
  };
  Vector mu1 = Vector::Zero(p);
  Vector mu2 = Vector::Zero(p);
  switch (id) {
    case SettingId::i: {
      require(p >= 2, "needs p >= 2");
      mu1.head(2) << 1.0, 1.0;
      mu2.head(2) << 2.0, 2.2;
      std::vector<double> var(static_cast<std::size_t>(p), 1.0);
      var[0] = 1.5 * 1.5;
      var[1] = 0.75 * 0.75;
      return GaussianModel(mu1, mu2, DiagonalCov{std::move(var)});
    }
    case SettingId::ii: {
      require(p >= 9, "needs p >= 9");
      mu1.head(9).setOnes();
      mu2.head(9) << 2, 2, 2, 2, 2.5, 2.5, 2.5, 3, 3;
      const double v57 = options.literal_setting_ii ? 2.25 * 2.25 : 2.25;
      const double v89 = options.literal_setting_ii ? 1.5 * 1.5 : 1.5;
      std::vector<double> var(static_cast<std::size_t>(p), 1.0);
      std::fill_n(var.begin(), 4, 10.0);
      std::fill_n(var.begin() + 4, 3, v57);
      std::fill_n(var.begin() + 7, 2, v89);
      return GaussianModel(mu1, mu2, DiagonalCov{std::move(var)});
    }
    case SettingId::iii: {
      require(p >= 11, "needs p >= 11");
      mu2(0) = 1.0;
      mu2.segment(1, 5).setConstant(0.5);
      mu2.segment(6, 5).setConstant(0.1);
      return GaussianModel(mu1, mu2, EquicorrelationCov{4.0, 0.8});
    }
    case SettingId::iv: {
      require(p >= 10 && p % 5 == 0, "needs p >= 10 and divisible by 5");
      mu2(0) = 1.0;
      mu2(5) = 0.1;
      return GaussianModel(mu1, mu2, BlockDiagonalCov{{{5, 1.0, 0.3}, {5, 1.0, 0.8}}});
    }
  }
  throw InvalidSpec("unknown setting");
}

GaussianSampler::GaussianSampler(const GaussianModel& model)
    : mu1_(model.mu1()), mu2_(model.mu2()), root_(model.cov(), model.p()) {}

LabeledDataset GaussianSampler::sample(Index n1, Index n2, Rng& rng) const {
  if (n1 < 1 || n2 < 1) throw InvalidDimension("both class sizes must be >= 1");
  const Index p = mu1_.size();
  // Row-major scratch so each draw is contiguous.
  Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor> x(n1 + n2, p);
  Vector z(p);
  std::vector<int> y(static_cast<std::size_t>(n1 + n2));
  for (Index i = 0; i < n1 + n2; ++i) {
    for (Index j = 0; j < p; ++j) z(j) = rng.normal();
    double* row = x.row(i).data();
    root_.apply(z.data(), row);
    const bool first = i < n1;
    x.row(i) += (first ? mu1_ : mu2_).transpose();
    y[static_cast<std::size_t>(i)] = first ? 1 : 2;
  }
  return LabeledDataset(Matrix(x), std::move(y));
}

LabeledDataset sample_dataset(const GaussianModel& model, Index n1, Index n2, Rng& rng) {
  return GaussianSampler(model).sample(n1, n2, rng);
}

}  // namespace simlab
