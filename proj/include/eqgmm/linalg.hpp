#pragma once

#include <cstdint>

#include <Eigen/Dense>

namespace eqgmm {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// Dense symmetric matrix. Construction symmetrizes the input as (m + mᵀ)/2,
/// so entries(i, j) == entries(j, i) holds bit-for-bit afterwards.
class SymMatrix {
 public:
  SymMatrix() = default;
  explicit SymMatrix(const Matrix& m);

  static SymMatrix identity(int dim);

  [[nodiscard]] int dim() const { return static_cast<int>(m_.rows()); }
  [[nodiscard]] const Matrix& matrix() const { return m_; }
  [[nodiscard]] double operator()(int i, int j) const { return m_(i, j); }

 private:
  Matrix m_;
};

/// Eigendecomposition m = basis · diag(eigenvalues) · basisᵀ.
/// Eigenvalues are sorted in non-increasing order; each eigenvector is signed
/// so that its largest-magnitude entry is positive.
struct SpectralDecomp {
  Matrix basis;
  Vector eigenvalues;

  [[nodiscard]] Matrix reconstruct() const;
};

/// Relative threshold used for every positive-definiteness check:
/// 1e-12 times the largest eigenvalue.
inline constexpr double kPdRelativeTolerance = 1e-12;

SpectralDecomp sym_eig(const SymMatrix& m);

/// True when every eigenvalue exceeds kPdRelativeTolerance × the largest one
/// (and the largest is itself positive).
bool is_positive_definite(const SymMatrix& m);

/// Throws NotPositiveDefinite with `what` in the message unless m is PD.
void require_positive_definite(const SymMatrix& m, const char* what);

/// Whitening transform W = diag(L)^{-1/2} Qᵀ for psi = Q diag(L) Qᵀ,
/// so that W · psi · Wᵀ = I.
Matrix whitening(const SymMatrix& psi);

/// Eigenvalues of a·b⁻¹ in non-increasing order, computed as the eigenvalues
/// of C⁻¹ a C⁻ᵀ with b = C Cᵀ.
Vector generalized_eigvals(const SymMatrix& a, const SymMatrix& b);

/// Orthonormalized matrix of independent standard normal draws (Haar
/// distributed after the R-diagonal sign correction).
Matrix random_orthonormal(int dim, std::uint64_t seed);

template <class Rng>
Matrix random_orthonormal(int dim, Rng& rng);

/// log|det m| for a nonsingular square matrix (via partial-pivot LU).
double log_abs_det(const Matrix& m);

}  // namespace eqgmm

#include "eqgmm/detail/random_orthonormal.ipp"
