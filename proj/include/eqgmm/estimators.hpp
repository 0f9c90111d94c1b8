#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "eqgmm/mixture.hpp"

namespace eqgmm {

/// Iteration control shared by every EM-type estimator.
struct EmControl {
  int max_iters = 500;
  double rel_tol = 1e-8;  // stop when |ℓ_t − ℓ_{t−1}| / (1 + |ℓ_t|) < rel_tol
  int n_starts = 10;
  std::uint64_t seed = 0;

  void validate() const;
};

struct FitDiagnostics {
  int rescues = 0;             // empty-component reinitializations
  bool ridge_applied = false;  // a pooled scatter needed the ridge fallback
  bool failed = false;         // rescue cap exceeded; params are unusable
  std::string message;
};

struct FitResult {
  MixtureParams params;
  std::vector<double> loglik_trace;  // one value per iteration, after each E-step
  double final_loglik = 0.0;
  ResponsibilityMatrix responsibilities;
  Labels labels;
  bool converged = false;
  int iterations = 0;
  int start_index = 0;
  std::optional<double> c_used;
  std::optional<SymMatrix> psi_used;
  FitDiagnostics diagnostics;
};

/// Homoscedastic Student-t mixture: common scale Ξ and fixed degrees of freedom.
struct StudentTParams {
  Vector weights;
  std::vector<Vector> means;
  SymMatrix scale;
  double dof = 4.0;

  /// Covariance of each component, dof·Ξ/(dof − 2).
  [[nodiscard]] SymMatrix covariance() const;
};

/// Random partition of n rows into g classes with 1-based labels. Redrawn
/// until each class has at least min_size members; after 100 redraws the
/// smallest classes are topped up by reassigning random rows from classes
/// that can spare them. min_size is capped at n / g.
Labels random_partition_init(int n, int g, int min_size, std::uint64_t seed);

/// n_starts independent partitions drawn from seeds derived from `seed`.
std::vector<Labels> random_starts(int n, int g, int min_size, int n_starts, std::uint64_t seed);

// ---- homN ----------------------------------------------------------------

FitResult fit_homoscedastic_normal(const Dataset& data, int g, const Labels& init,
                                   const EmControl& control);
/// Best of control.n_starts random starts by final log-likelihood.
FitResult fit_homoscedastic_normal(const Dataset& data, int g, const EmControl& control);

// ---- hetN ----------------------------------------------------------------

inline constexpr double kHetLowerBound = 1e-7;
inline constexpr double kHetUpperBound = 1e7;

FitResult fit_heteroscedastic_bounded(const Dataset& data, int g, double lower, double upper,
                                      const Labels& init, const EmControl& control);
FitResult fit_heteroscedastic_bounded(const Dataset& data, int g, double lower, double upper,
                                      const EmControl& control);

// ---- homt ----------------------------------------------------------------

/// The FitResult carries the t-mixture log-likelihood trace; its params hold
/// Gaussian surrogates (common covariance dof·Ξ/(dof−2)) so that labels and
/// responsibilities can be reported alongside the other estimators.
std::pair<StudentTParams, FitResult> fit_homoscedastic_t(const Dataset& data, int g, double dof,
                                                         const Labels& init,
                                                         const EmControl& control);
std::pair<StudentTParams, FitResult> fit_homoscedastic_t(const Dataset& data, int g, double dof,
                                                         const EmControl& control);

/// Observed-data log-likelihood of a homoscedastic t mixture.
double t_mixture_log_likelihood(const Dataset& data, const StudentTParams& params);

/// Precision weights (dof + J)/(dof + δᵢ_g), n×G.
Matrix t_precision_weights(const Dataset& data, const StudentTParams& params);

/// Index of the best fit by final log-likelihood (first on ties), skipping
/// failed fits; -1 if all failed.
int best_by_loglik(const std::vector<FitResult>& fits);

}  // namespace eqgmm
