#include "eqgmm/linalg.hpp"

#include <cmath>
#include <string>

#include "eqgmm/errors.hpp"
#include "eqgmm/rng.hpp"

namespace eqgmm {

SymMatrix::SymMatrix(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("SymMatrix: matrix is not square");
  if (m.rows() < 1) throw InvalidInput("SymMatrix: dimension must be >= 1");
  m_ = 0.5 * (m + m.transpose());
}

SymMatrix SymMatrix::identity(int dim) { return SymMatrix(Matrix::Identity(dim, dim)); }

Matrix SpectralDecomp::reconstruct() const {
  return basis * eigenvalues.asDiagonal() * basis.transpose();
}

SpectralDecomp sym_eig(const SymMatrix& m) {
  const Matrix& a = m.matrix();
  if (!a.allFinite()) throw InvalidInput("sym_eig: non-finite entries");
  const int n = m.dim();

  Eigen::SelfAdjointEigenSolver<Matrix> solver(a);
  if (solver.info() != Eigen::Success) throw InvalidInput("sym_eig: eigensolver failed");

  // Eigen returns ascending order; flip to descending.
  SpectralDecomp out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.basis = solver.eigenvectors().rowwise().reverse();
  for (int j = 0; j < n; ++j) {
    Eigen::Index imax = 0;
    out.basis.col(j).cwiseAbs().maxCoeff(&imax);
    if (out.basis(imax, j) < 0.0) out.basis.col(j) = -out.basis.col(j);
  }
  return out;
}

bool is_positive_definite(const SymMatrix& m) {
  const Vector l = sym_eig(m).eigenvalues;
  const double top = l(0);
  return top > 0.0 && l(l.size() - 1) > kPdRelativeTolerance * top;
}

void require_positive_definite(const SymMatrix& m, const char* what) {
  if (!is_positive_definite(m))
    throw NotPositiveDefinite(std::string(what) + ": matrix is not positive definite");
}

Matrix whitening(const SymMatrix& psi) {
  const SpectralDecomp d = sym_eig(psi);
  const double top = d.eigenvalues(0);
  if (!(top > 0.0) || d.eigenvalues(psi.dim() - 1) <= kPdRelativeTolerance * top)
    throw NotPositiveDefinite("whitening: target is not positive definite");
  return d.eigenvalues.cwiseSqrt().cwiseInverse().asDiagonal() * d.basis.transpose();
}

Vector generalized_eigvals(const SymMatrix& a, const SymMatrix& b) {
  if (a.dim() != b.dim()) throw InvalidInput("generalized_eigvals: dimension mismatch");
  require_positive_definite(b, "generalized_eigvals");
  Eigen::LLT<Matrix> llt(b.matrix());
  if (llt.info() != Eigen::Success)
    throw NotPositiveDefinite("generalized_eigvals: Cholesky of b failed");
  // C⁻¹ a C⁻ᵀ
  Matrix t = llt.matrixL().solve(a.matrix());
  Matrix m = llt.matrixL().solve(t.transpose());
  return sym_eig(SymMatrix(m)).eigenvalues;
}

Matrix random_orthonormal(int dim, std::uint64_t seed) {
  Rng rng(seed);
  return random_orthonormal(dim, rng);
}

double log_abs_det(const Matrix& m) {
  if (m.rows() != m.cols()) throw InvalidInput("log_abs_det: matrix is not square");
  Eigen::PartialPivLU<Matrix> lu(m);
  double s = 0.0;
  const Matrix& u = lu.matrixLU();
  for (Eigen::Index i = 0; i < u.rows(); ++i) {
    const double d = std::abs(u(i, i));
    if (d == 0.0) throw InvalidInput("log_abs_det: matrix is singular");
    s += std::log(d);
  }
  return s;
}

}  // namespace eqgmm
