#include "simlab/linalg.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "simlab/errors.hpp"

namespace simlab {

namespace {

template <class... Ts>
struct Overloaded : Ts... {
  using Ts::operator()...;
};
template <class... Ts>
Overloaded(Ts...) -> Overloaded<Ts...>;

struct BlockLayout {
  Index offset;
  EquicorrelationBlock block;
};

std::vector<BlockLayout> layout_blocks(const BlockDiagonalCov& spec, Index p) {
  if (spec.pattern.empty()) throw InvalidSpec("block-diagonal covariance needs at least one block");
  std::vector<BlockLayout> out;
  Index offset = 0;
  std::size_t k = 0;
  while (offset < p) {
    const auto& block = spec.pattern[k % spec.pattern.size()];
    if (block.size < 1) throw InvalidSpec("block size must be positive");
    if (offset + block.size > p)
      throw InvalidSpec("block sizes do not tile p=" + std::to_string(p));
    out.push_back({offset, block});
    offset += block.size;
    ++k;
  }
  return out;
}

void check_equicorrelation(double variance, double correlation, Index m) {
  if (!(variance > 0.0)) throw InvalidSpec("variance must be positive");
  if (!(std::abs(correlation) < 1.0)) throw InvalidSpec("|correlation| must be < 1");
  // Smallest eigenvalue of (1 - rho) I + rho J is 1 + (m - 1) rho when rho < 0.
  if (m > 1 && 1.0 + static_cast<double>(m - 1) * correlation < 0.0)
    throw InvalidSpec("equicorrelation matrix is not positive semidefinite");
}

void fill_equicorrelation(Matrix& out, Index offset, Index m, double variance, double covariance) {
  out.block(offset, offset, m, m).setConstant(covariance);
  out.block(offset, offset, m, m).diagonal().setConstant(variance);
}

}  // namespace

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols() || m.rows() < 1)
    throw DimensionMismatch("symmetric matrix must be square and non-empty");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  if ((m - m.transpose()).cwiseAbs().maxCoeff() > 1e-12 * scale)
    throw InvalidSpec("matrix is not symmetric");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(Index n) { return SymMatrix(Matrix::Identity(n, n)); }

SymMatrix SymMatrix::diagonal(const Vector& d) { return SymMatrix(Matrix(d.asDiagonal())); }

LowerTriangularFactor cholesky(const SymMatrix& a) {
  const Index n = a.dim();
  const Matrix& m = a.matrix();
  const double tol = kCholeskyPivotTolerance * std::max(0.0, m.diagonal().maxCoeff());
  Matrix l = Matrix::Zero(n, n);
  for (Index j = 0; j < n; ++j) {
    double pivot = m(j, j) - l.row(j).head(j).squaredNorm();
    if (!(pivot > tol) || !std::isfinite(pivot))
      throw NotPositiveDefinite("non-positive pivot at index " + std::to_string(j));
    const double ljj = std::sqrt(pivot);
    l(j, j) = ljj;
    for (Index i = j + 1; i < n; ++i)
      l(i, j) = (m(i, j) - l.row(i).head(j).dot(l.row(j).head(j))) / ljj;
  }
  return {std::move(l)};
}

Vector solve_spd(const SymMatrix& a, const Vector& b) {
  if (b.size() != a.dim()) throw DimensionMismatch("solve_spd: right-hand side length mismatch");
  const auto factor = cholesky(a);
  const auto lower = factor.lower.triangularView<Eigen::Lower>();
  Vector y = lower.solve(b);
  return lower.transpose().solve(y);
}

SymMatrix pseudo_inverse(const SymMatrix& a, double rel_tol) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(a.matrix());
  const Vector& values = eig.eigenvalues();
  const double cutoff = rel_tol * values.cwiseAbs().maxCoeff();
  Vector inv = Vector::Zero(values.size());
  for (Index i = 0; i < values.size(); ++i)
    if (std::abs(values(i)) > cutoff) inv(i) = 1.0 / values(i);
  const Matrix& vecs = eig.eigenvectors();
  return SymMatrix(vecs * inv.asDiagonal() * vecs.transpose());
}

void validate_cov(const CovSpec& spec, Index p) {
  if (p < 1) throw InvalidSpec("dimension must be positive");
  std::visit(Overloaded{
                 [&](const DiagonalCov& d) {
                   if (static_cast<Index>(d.variances.size()) != p)
                     throw InvalidSpec("diagonal covariance needs exactly p variances");
                   for (double v : d.variances)
                     if (!(v > 0.0)) throw InvalidSpec("variance must be positive");
                 },
                 [&](const EquicorrelationCov& e) {
                   check_equicorrelation(e.variance, e.covariance / e.variance, p);
                 },
                 [&](const BlockDiagonalCov& b) {
                   for (const auto& [offset, block] : layout_blocks(b, p))
                     check_equicorrelation(block.variance, block.correlation, block.size);
                 },
                 [&](const DenseCov& d) {
                   if (d.matrix.dim() != p) throw InvalidSpec("dense covariance has wrong dimension");
                   if ((d.matrix.matrix().diagonal().array() <= 0.0).any())
                     throw InvalidSpec("variance must be positive");
                 },
             },
             spec);
}

SymMatrix build_cov(const CovSpec& spec, Index p) {
  validate_cov(spec, p);
  return std::visit(
      Overloaded{
          [&](const DiagonalCov& d) {
            return SymMatrix::diagonal(Eigen::Map<const Vector>(d.variances.data(), p));
          },
          [&](const EquicorrelationCov& e) {
            Matrix m(p, p);
            fill_equicorrelation(m, 0, p, e.variance, e.covariance);
            return SymMatrix(m);
          },
          [&](const BlockDiagonalCov& b) {
            Matrix m = Matrix::Zero(p, p);
            for (const auto& [offset, block] : layout_blocks(b, p))
              fill_equicorrelation(m, offset, block.size, block.variance,
                                   block.correlation * block.variance);
            return SymMatrix(m);
          },
          [&](const DenseCov& d) { return d.matrix; },
      },
      spec);
}

bool is_diagonal(const CovSpec& spec) { return std::holds_alternative<DiagonalCov>(spec); }

Vector equicorrelation_inverse_apply(double variance, double covariance, const Vector& b) {
  const double m = static_cast<double>(b.size());
  const double rho = covariance / variance;
  const double scale = 1.0 / (variance * (1.0 - rho));
  const double shrink = rho / (1.0 + (m - 1.0) * rho);
  return scale * (b.array() - shrink * b.sum()).matrix();
}

Vector inverse_apply(const CovSpec& spec, const Vector& v) {
  const Index p = v.size();
  validate_cov(spec, p);
  return std::visit(
      Overloaded{
          [&](const DiagonalCov& d) {
            Vector out(p);
            for (Index j = 0; j < p; ++j) out(j) = v(j) / d.variances[static_cast<std::size_t>(j)];
            return out;
          },
          [&](const EquicorrelationCov& e) {
            return equicorrelation_inverse_apply(e.variance, e.covariance, v);
          },
          [&](const BlockDiagonalCov& b) {
            Vector out = Vector::Zero(p);
            for (const auto& [offset, block] : layout_blocks(b, p)) {
              const Vector seg = v.segment(offset, block.size);
              if (seg.isZero(0.0)) continue;
              out.segment(offset, block.size) = equicorrelation_inverse_apply(
                  block.variance, block.correlation * block.variance, seg);
            }
            return out;
          },
          [&](const DenseCov& d) { return solve_spd(d.matrix, v); },
      },
      spec);
}

double inverse_quad_form(const CovSpec& spec, const Vector& v) { return v.dot(inverse_apply(spec, v)); }

double quad_form(const CovSpec& spec, const Vector& w) {
  const Index p = w.size();
  validate_cov(spec, p);
  return std::visit(
      Overloaded{
          [&](const DiagonalCov& d) {
            double s = 0.0;
            for (Index j = 0; j < p; ++j) s += w(j) * w(j) * d.variances[j];
            return s;
          },
          [&](const EquicorrelationCov& e) {
            const double sum = w.sum();
            return (e.variance - e.covariance) * w.squaredNorm() + e.covariance * sum * sum;
          },
          [&](const BlockDiagonalCov& b) {
            double s = 0.0;
            for (const auto& [offset, block] : layout_blocks(b, p)) {
              const auto seg = w.segment(offset, block.size);
              const double cov = block.correlation * block.variance;
              const double sum = seg.sum();
              s += (block.variance - cov) * seg.squaredNorm() + cov * sum * sum;
            }
            return s;
          },
          [&](const DenseCov& d) { return w.dot(d.matrix.matrix() * w); },
      },
      spec);
}

CovRoot::CovRoot(const CovSpec& spec, Index p) : p_(p) {
  validate_cov(spec, p);
  if (const auto* d = std::get_if<DiagonalCov>(&spec)) {
    sd_ = Eigen::Map<const Vector>(d->variances.data(), p).cwiseSqrt();
    return;
  }
  if (const auto* b = std::get_if<BlockDiagonalCov>(&spec)) {
    for (const auto& [offset, block] : layout_blocks(*b, p)) {
      Matrix m(block.size, block.size);
      fill_equicorrelation(m, 0, block.size, block.variance, block.correlation * block.variance);
      blocks_.push_back({offset, cholesky(SymMatrix(m)).lower});
    }
    return;
  }
  blocks_.push_back({0, cholesky(build_cov(spec, p)).lower});
}

void CovRoot::apply(const double* z, double* out) const {
  if (sd_.size() > 0) {
    for (Index j = 0; j < p_; ++j) out[j] = sd_(j) * z[j];
    return;
  }
  for (const auto& block : blocks_) {
    const Index m = block.lower.rows();
    Eigen::Map<const Vector> zin(z + block.offset, m);
    Eigen::Map<Vector> dst(out + block.offset, m);
    dst.noalias() = block.lower.triangularView<Eigen::Lower>() * zin;
  }
}

}  // namespace simlab
