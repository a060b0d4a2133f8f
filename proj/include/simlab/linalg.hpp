#pragma once

#include <Eigen/Dense>

#include <variant>
#include <vector>

namespace simlab {

using Index = Eigen::Index;
using Vector = Eigen::VectorXd;
using Matrix = Eigen::MatrixXd;

/// Dense symmetric matrix. Construction checks symmetry to 1e-12 relative to the
/// largest entry and then stores the exactly symmetrized average.
class SymMatrix {
 public:
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(Index n);
  static SymMatrix diagonal(const Vector& d);

  Index dim() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Lower-triangular L with L * L^T equal to the factored matrix.
struct LowerTriangularFactor {
  Matrix lower;

  Matrix reconstruct() const { return lower * lower.transpose(); }
};

/// Relative pivot tolerance: a pivot <= 1e-12 * max diagonal is degenerate.
inline constexpr double kCholeskyPivotTolerance = 1e-12;
/// Default relative eigenvalue cutoff of pseudo_inverse.
inline constexpr double kPseudoInverseTolerance = 1e-10;

/// Throws NotPositiveDefinite on a degenerate pivot.
LowerTriangularFactor cholesky(const SymMatrix& a);

/// Solves a x = b for positive definite a through its Cholesky factor.
Vector solve_spd(const SymMatrix& a, const Vector& b);

/// Moore-Penrose inverse from the symmetric eigendecomposition; eigenvalues with
/// magnitude below rel_tol * max|eigenvalue| are treated as zero.
SymMatrix pseudo_inverse(const SymMatrix& a, double rel_tol = kPseudoInverseTolerance);

// ---------------------------------------------------------------------------
// Covariance structures

/// Independent features; one variance per feature (length must equal p).
struct DiagonalCov {
  std::vector<double> variances;
};

/// Common variance on the diagonal, common covariance everywhere else.
struct EquicorrelationCov {
  double variance = 1.0;
  double covariance = 0.0;
};

struct EquicorrelationBlock {
  Index size = 1;
  double variance = 1.0;
  double correlation = 0.0;
};

/// Block-diagonal matrix whose blocks cycle through `pattern` until p is filled;
/// the last block must end exactly at p.
struct BlockDiagonalCov {
  std::vector<EquicorrelationBlock> pattern;
};

struct DenseCov {
  SymMatrix matrix;
};

using CovSpec = std::variant<DiagonalCov, EquicorrelationCov, BlockDiagonalCov, DenseCov>;

/// Throws InvalidSpec when the spec cannot be realized at dimension p.
void validate_cov(const CovSpec& spec, Index p);

/// Dense realization of `spec` at dimension p.
SymMatrix build_cov(const CovSpec& spec, Index p);

bool is_diagonal(const CovSpec& spec);

/// Closed-form Sigma^{-1} b for an equicorrelation matrix of dimension b.size():
/// (1 / (v (1 - rho))) [I - rho / (1 + (m - 1) rho) J].
Vector equicorrelation_inverse_apply(double variance, double covariance, const Vector& b);

/// Sigma^{-1} v using the cheapest exact route for the structure
/// (diagonal division, equicorrelation closed form per block, dense solve).
Vector inverse_apply(const CovSpec& spec, const Vector& v);

/// v^T Sigma^{-1} v using the cheapest exact route for the structure
/// (diagonal division, equicorrelation closed form per block, dense solve).
double inverse_quad_form(const CovSpec& spec, const Vector& v);

/// w^T Sigma w without materializing Sigma when structure allows.
double quad_form(const CovSpec& spec, const Vector& w);

/// Square-root factor used for multivariate normal sampling: x = root * z.
/// Diagonal structures keep per-feature standard deviations; otherwise one
/// Cholesky factor per diagonal block.
class CovRoot {
 public:
  CovRoot(const CovSpec& spec, Index p);

  Index dim() const { return p_; }
  /// out = root * z; both of length dim().
  void apply(const double* z, double* out) const;

 private:
  struct Block {
    Index offset;
    Matrix lower;
  };

  Index p_;
  Vector sd_;
  std::vector<Block> blocks_;
};

}  // namespace simlab
