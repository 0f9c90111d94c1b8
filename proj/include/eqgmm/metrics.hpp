#pragma once

#include <optional>
#include <span>
#include <vector>

#include "eqgmm/estimators.hpp"

namespace eqgmm {

struct MetricReport {
  double mad = 0.0;
  double mad_per_observation = 0.0;
  double arand = 0.0;
  double elapsed_seconds = 0.0;
  std::optional<double> selected_c;
  std::optional<int> n_local_maxima;
};

/// Largest number of components for the exhaustive permutation search.
inline constexpr int kMaxMadComponents = 8;

/// min over column permutations π of Σ_g Σᵢ |true[i][g] − est[i][π(g)]|
/// (unnormalized).
double mad(const ResponsibilityMatrix& truth, const ResponsibilityMatrix& estimate);

/// Hubert–Arabie adjusted Rand index. Labels may be any integers.
double adjusted_rand(std::span<const int> a, std::span<const int> b);

/// Number of groups of final log-likelihoods, linking values a and b when
/// |a − b| ≤ tol·(1 + max(|a|, |b|)) and closing the relation transitively.
int count_local_maxima(std::span<const double> logliks, double tol = 1e-6);
int count_local_maxima(const std::vector<FitResult>& fits, double tol = 1e-6);

}  // namespace eqgmm
