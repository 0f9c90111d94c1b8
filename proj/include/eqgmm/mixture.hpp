#pragma once

#include <span>
#include <vector>

#include "eqgmm/linalg.hpp"

namespace eqgmm {

/// Hard cluster labels. Component labels are 1-based (1..G) everywhere in
/// the public interface.
using Labels = std::vector<int>;

/// n observations of dimension J, one per row, with optional true labels.
struct Dataset {
  Matrix rows;
  Labels true_labels;  // empty when unknown

  Dataset() = default;
  explicit Dataset(Matrix x, Labels labels = {});

  [[nodiscard]] int n() const { return static_cast<int>(rows.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(rows.cols()); }
  [[nodiscard]] bool has_labels() const { return !true_labels.empty(); }

  /// Rows selected by 0-based index, in the given order.
  [[nodiscard]] Dataset subset(std::span<const int> index) const;

  /// Throws InvalidInput unless n ≥ 1, J ≥ 1, all values finite and any
  /// labels match n.
  void validate() const;
};

/// Full parameter set of a G-component, J-variate Gaussian mixture.
struct MixtureParams {
  Vector weights;
  std::vector<Vector> means;
  std::vector<SymMatrix> covariances;

  [[nodiscard]] int n_components() const { return static_cast<int>(weights.size()); }
  [[nodiscard]] int dim() const { return means.empty() ? 0 : static_cast<int>(means.front().size()); }

  /// Weights strictly positive summing to 1 (1e-10), every covariance PD,
  /// consistent dimensions. Throws InvalidInput / NotPositiveDefinite.
  void validate() const;
};

/// n×G posterior membership probabilities; rows sum to one.
struct ResponsibilityMatrix {
  Matrix values;

  [[nodiscard]] int n() const { return static_cast<int>(values.rows()); }
  [[nodiscard]] int n_components() const { return static_cast<int>(values.cols()); }
};

/// log φ(x; mean, cov), via a Cholesky factor of cov.
double gaussian_logdensity(const Vector& x, const Vector& mean, const SymMatrix& cov);

/// Σᵢ log Σ_g p_g φ(xᵢ; μ_g, Σ_g), reduced with log-sum-exp.
double log_likelihood(const Dataset& data, const MixtureParams& params);

ResponsibilityMatrix posteriors(const Dataset& data, const MixtureParams& params);

/// argmax per row, ties to the lowest component index. Returns 1-based labels.
Labels hard_assign(const ResponsibilityMatrix& resp);

/// Parameters of the image of the mixture under x ↦ a·x + b.
MixtureParams transform_params(const MixtureParams& params, const Matrix& a, const Vector& b);

/// Rows mapped by x ↦ a·x + b; labels carried over.
Dataset transform_data(const Dataset& data, const Matrix& a, const Vector& b);

/// One-hot n×G responsibilities from 1-based labels.
Matrix one_hot(std::span<const int> labels, int g);

/// Per-row, per-component terms log p_g + log φ(xᵢ; μ_g, Σ_g) for a raw n×J
/// block. Used by the estimators and by the likelihood evaluations above.
Matrix weighted_log_densities(const Matrix& x, const MixtureParams& params);

/// Row-wise log-sum-exp of an n×G matrix, max-shifted.
Vector log_sum_exp_rows(const Matrix& terms);

}  // namespace eqgmm
