#pragma once

#include <random>

#include "eqgmm/errors.hpp"

namespace eqgmm {

template <class Rng>
Matrix random_orthonormal(int dim, Rng& rng) {
  if (dim < 1) throw InvalidInput("random_orthonormal: dim must be >= 1");
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix z(dim, dim);
  for (int j = 0; j < dim; ++j)
    for (int i = 0; i < dim; ++i) z(i, j) = normal(rng);
  Eigen::HouseholderQR<Matrix> qr(z);
  Matrix q = qr.householderQ() * Matrix::Identity(dim, dim);
  const Matrix& r = qr.matrixQR();
  for (int j = 0; j < dim; ++j)
    if (r(j, j) < 0.0) q.col(j) = -q.col(j);
  return q;
}

}  // namespace eqgmm
