#include <doctest.h>

#include <random>

#include <Eigen/Eigenvalues>

#include "eqgmm/errors.hpp"
#include "eqgmm/linalg.hpp"
#include "support.hpp"

using namespace eqgmm;
using eqgmm::testing::random_spd;

TEST_CASE("SymMatrix symmetrizes by averaging and rejects bad shapes") {
  Matrix m(2, 2);
  m << 1.0, 2.0, 4.0, 3.0;
  const SymMatrix s(m);
  CHECK(s(0, 1) == 3.0);
  CHECK(s(1, 0) == s(0, 1));
  CHECK_THROWS_AS(SymMatrix(Matrix(2, 3)), InvalidInput);
  CHECK_THROWS_AS(SymMatrix(Matrix(0, 0)), InvalidInput);
}

TEST_CASE("sym_eig on identity and diagonal inputs") {
  const SpectralDecomp id = sym_eig(SymMatrix::identity(3));
  CHECK((id.eigenvalues - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((id.basis.transpose() * id.basis - Matrix::Identity(3, 3)).cwiseAbs().maxCoeff() < 1e-10);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 1.0;
  d(1, 1) = 4.0;
  const SpectralDecomp e = sym_eig(SymMatrix(d));
  CHECK(e.eigenvalues(0) == doctest::Approx(4.0));
  CHECK(e.eigenvalues(1) == doctest::Approx(1.0));
  // Largest entry of each eigenvector is positive, so the basis is an exact permutation.
  CHECK(std::abs(e.basis(1, 0) - 1.0) < 1e-14);
  CHECK(std::abs(e.basis(0, 1) - 1.0) < 1e-14);
}

TEST_CASE("sym_eig reconstructs random SPD matrices") {
  std::mt19937_64 rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    const int j = 1 + trial % 8;
    const SymMatrix m = random_spd(j, rng);
    const SpectralDecomp e = sym_eig(m);
    const double rel = (e.reconstruct() - m.matrix()).norm() / m.matrix().norm();
    CHECK(rel < 1e-8);
    CHECK((e.basis.transpose() * e.basis - Matrix::Identity(j, j)).cwiseAbs().maxCoeff() < 1e-10);
    for (int k = 1; k < j; ++k) CHECK(e.eigenvalues(k - 1) >= e.eigenvalues(k));
    for (int k = 0; k < j; ++k) {
      Eigen::Index at = 0;
      e.basis.col(k).cwiseAbs().maxCoeff(&at);
      CHECK(e.basis(at, k) > 0.0);
    }
  }
}

TEST_CASE("sym_eig rejects non-finite input") {
  Matrix m = Matrix::Identity(2, 2);
  m(0, 0) = std::numeric_limits<double>::quiet_NaN();
  CHECK_THROWS_AS(sym_eig(SymMatrix(m)), InvalidInput);
}

TEST_CASE("whitening maps psi to the identity") {
  // Ψ = I: the whitening matrix is a signed permutation.
  const Matrix wi = whitening(SymMatrix::identity(3)).cwiseAbs();
  CHECK((wi.rowwise().sum() - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((wi.colwise().sum().transpose() - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);
  CHECK((wi.rowwise().maxCoeff() - Vector::Ones(3)).cwiseAbs().maxCoeff() < 1e-14);

  Matrix d = Matrix::Zero(2, 2);
  d(0, 0) = 4.0;
  d(1, 1) = 9.0;
  const Matrix w = whitening(SymMatrix(d));
  // Rows come in eigenvalue order: 9 first, then 4.
  CHECK(w(0, 1) == doctest::Approx(1.0 / 3.0));
  CHECK(w(1, 0) == doctest::Approx(0.5));
  CHECK(std::abs(w(0, 0)) + std::abs(w(1, 1)) < 1e-14);

  std::mt19937_64 rng(11);
  for (int trial = 0; trial < 30; ++trial) {
    const int j = 1 + trial % 6;
    const SymMatrix psi = random_spd(j, rng);
    const Matrix wt = whitening(psi);
    CHECK((wt * psi.matrix() * wt.transpose() - Matrix::Identity(j, j)).cwiseAbs().maxCoeff() < 1e-8);
  }
}

TEST_CASE("whitening and PD checks reject singular targets") {
  Matrix m = Matrix::Zero(2, 2);
  m(0, 0) = 1.0;
  CHECK_FALSE(is_positive_definite(SymMatrix(m)));
  CHECK_THROWS_AS(whitening(SymMatrix(m)), NotPositiveDefinite);
  CHECK_THROWS_AS(require_positive_definite(SymMatrix(-Matrix::Identity(2, 2)), "test"), NotPositiveDefinite);
  CHECK(is_positive_definite(SymMatrix::identity(4)));
}

TEST_CASE("generalized eigenvalues: pinned cases") {
  std::mt19937_64 rng(3);
  const SymMatrix a = random_spd(4, rng);
  CHECK((generalized_eigvals(a, a) - Vector::Ones(4)).cwiseAbs().maxCoeff() < 1e-10);

  Matrix x = Matrix::Zero(2, 2), y = Matrix::Zero(2, 2);
  x(0, 0) = 2.0;
  x(1, 1) = 1.0;
  y(0, 0) = 1.0;
  y(1, 1) = 2.0;
  const Vector l = generalized_eigvals(SymMatrix(x), SymMatrix(y));
  CHECK(l(0) == doctest::Approx(2.0));
  CHECK(l(1) == doctest::Approx(0.5));
  CHECK_THROWS_AS(generalized_eigvals(SymMatrix(x), SymMatrix(Matrix::Zero(2, 2))), NotPositiveDefinite);
}

TEST_CASE("generalized eigenvalues: oracles and invariance") {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 40; ++trial) {
    const int j = 1 + trial % 7;
    const SymMatrix a = random_spd(j, rng), b = random_spd(j, rng);
    const Vector ab = generalized_eigvals(a, b);
    const Vector ba = generalized_eigvals(b, a);
    for (int k = 0; k < j; ++k) CHECK(std::abs(ab(k) - 1.0 / ba(j - 1 - k)) < 1e-8 * (1.0 + std::abs(ab(k))));

    // Independent oracle: Eigen's generalized solver for a v = λ b v.
    Eigen::GeneralizedSelfAdjointEigenSolver<Matrix> gs(a.matrix(), b.matrix());
    const Vector oracle = gs.eigenvalues().reverse();
    CHECK((ab - oracle).cwiseAbs().maxCoeff() < 1e-8 * (1.0 + oracle.cwiseAbs().maxCoeff()));

    Matrix t(j, j);
    for (int r = 0; r < j; ++r)
      for (int c = 0; c < j; ++c) t(r, c) = z(rng);
    t += 3.0 * Matrix::Identity(j, j);
    const Vector moved = generalized_eigvals(SymMatrix(t * a.matrix() * t.transpose()),
                                             SymMatrix(t * b.matrix() * t.transpose()));
    CHECK((moved - ab).cwiseAbs().maxCoeff() < 1e-6 * (1.0 + ab.maxCoeff()));
  }
}

TEST_CASE("random_orthonormal is orthonormal and seed-deterministic") {
  const Matrix one = random_orthonormal(1, 42);
  CHECK(std::abs(std::abs(one(0, 0)) - 1.0) < 1e-15);
  CHECK(random_orthonormal(5, 9) == random_orthonormal(5, 9));
  CHECK(random_orthonormal(5, 9) != random_orthonormal(5, 10));
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Matrix q = random_orthonormal(8, seed);
    CHECK((q.transpose() * q - Matrix::Identity(8, 8)).cwiseAbs().maxCoeff() < 1e-10);
  }
  CHECK_THROWS_AS(random_orthonormal(0, 1), InvalidInput);
}

TEST_CASE("log_abs_det agrees with the eigenvalue product") {
  std::mt19937_64 rng(13);
  const SymMatrix m = random_spd(5, rng);
  CHECK(log_abs_det(m.matrix()) == doctest::Approx(sym_eig(m).eigenvalues.array().log().sum()).epsilon(1e-12));
  Matrix flip = -Matrix::Identity(3, 3);
  CHECK(std::abs(log_abs_det(flip)) < 1e-14);
}
