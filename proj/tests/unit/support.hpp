#pragma once

#include <random>

#include "eqgmm/mixture.hpp"

namespace eqgmm::testing {

// Well-conditioned SPD matrix: Z Zᵀ / j + 0.5 I with standard normal Z.
template <class Rng>
SymMatrix random_spd(int j, Rng& rng, double ridge = 0.5) {
  std::normal_distribution<double> z;
  Matrix a(j, j);
  for (int r = 0; r < j; ++r)
    for (int c = 0; c < j; ++c) a(r, c) = z(rng);
  return SymMatrix(a * a.transpose() / j + ridge * Matrix::Identity(j, j));
}

template <class Rng>
Matrix random_nonsingular(int j, Rng& rng) {
  std::normal_distribution<double> z;
  Matrix a(j, j);
  for (int r = 0; r < j; ++r)
    for (int c = 0; c < j; ++c) a(r, c) = z(rng);
  return a + 2.0 * std::sqrt(static_cast<double>(j)) * Matrix::Identity(j, j);
}

template <class Rng>
MixtureParams random_params(int g, int j, Rng& rng, double spread = 3.0) {
  std::normal_distribution<double> z;
  std::uniform_real_distribution<double> u(0.5, 1.5);
  MixtureParams p;
  p.weights.resize(g);
  for (int k = 0; k < g; ++k) p.weights(k) = u(rng);
  p.weights /= p.weights.sum();
  for (int k = 0; k < g; ++k) {
    Vector mu(j);
    for (int d = 0; d < j; ++d) mu(d) = spread * z(rng);
    p.means.push_back(mu);
    p.covariances.push_back(random_spd(j, rng));
  }
  return p;
}

// Rows drawn from the mixture, with labels.
template <class Rng>
Dataset sample_mixture(const MixtureParams& p, int n, Rng& rng) {
  std::discrete_distribution<int> pick(p.weights.data(), p.weights.data() + p.weights.size());
  std::normal_distribution<double> z;
  const int j = p.dim();
  Matrix x(n, j);
  Labels labels;
  for (int i = 0; i < n; ++i) {
    const int k = pick(rng);
    const Matrix l = p.covariances[k].matrix().llt().matrixL();
    Vector e(j);
    for (int d = 0; d < j; ++d) e(d) = z(rng);
    x.row(i) = (p.means[k] + l * e).transpose();
    labels.push_back(k + 1);
  }
  return Dataset(x, labels);
}

}  // namespace eqgmm::testing
