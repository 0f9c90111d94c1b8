#pragma once

#include <optional>
#include <span>
#include <vector>

#include "eqgmm/estimators.hpp"

namespace eqgmm {

/// Feasible region √c ≤ λ_j(Σ_g Ψ⁻¹) ≤ 1/√c for every component g.
struct ConstraintSpec {
  SymMatrix target;            // Ψ, positive definite
  double scale_balance = 1.0;  // c ∈ (0, 1]

  void validate() const;
};

/// Data-driven choices of the shrinkage target Ψ.
struct PsiKind {
  enum class Kind { SampleCovariance, HomoscedasticNormal, HomoscedasticT };
  Kind kind = Kind::HomoscedasticT;
  double dof = 4.0;  // HomoscedasticT only; must exceed 2

  static PsiKind sample_covariance() { return {Kind::SampleCovariance, 4.0}; }
  static PsiKind homoscedastic_normal() { return {Kind::HomoscedasticNormal, 4.0}; }
  static PsiKind homoscedastic_t(double dof = 4.0) { return {Kind::HomoscedasticT, dof}; }
};

/// Scale balance of the preliminary run that seeds cross-validation:
/// whitened-space eigenvalue bounds [0.5, 2].
inline constexpr double kPreliminaryScaleBalance = 0.25;

/// Ψ from the data: the ML sample covariance (divisor n), the within
/// covariance of the best homoscedastic normal fit, or dof·Ξ/(dof − 2) from
/// the best homoscedastic t fit. Multi-start fits draw control.n_starts
/// random partitions.
SymMatrix psi_target(const Dataset& data, int g, PsiKind kind, const EmControl& control);

/// As above with explicit shared starting partitions.
SymMatrix psi_target(const Dataset& data, int g, PsiKind kind, std::span<const Labels> starts,
                     const EmControl& control);

/// Elementwise min(1/√c, max(√c, l)).
Vector clip_eigenvalues(const Vector& l, double c);

/// Eigendecompose the scatter, clip its eigenvalues with clip_eigenvalues and
/// reconstruct.
SymMatrix constrained_cov_update(const SymMatrix& scatter, double c);

/// A dataset expressed in the coordinates x* = W x where W whitens Ψ.
/// Holding the whitened rows lets repeated fits (grid points, folds, starts)
/// share one transform.
class WhitenedProblem {
 public:
  WhitenedProblem(const Dataset& data, SymMatrix psi);

  [[nodiscard]] const SymMatrix& psi() const { return psi_; }
  [[nodiscard]] const Matrix& transform() const { return w_; }
  [[nodiscard]] const Matrix& whitened_rows() const { return whitened_; }
  [[nodiscard]] double log_abs_det_transform() const { return log_abs_det_w_; }
  [[nodiscard]] int n() const { return static_cast<int>(whitened_.rows()); }
  [[nodiscard]] int dim() const { return static_cast<int>(whitened_.cols()); }

  /// Constrained EM on all rows from 1-based `init` labels. Parameters and
  /// log-likelihoods are reported in original-space units.
  [[nodiscard]] FitResult fit(int g, double c, const Labels& init, const EmControl& control) const;

  /// Constrained EM on the selected rows; `init` is indexed like `rows`.
  [[nodiscard]] FitResult fit_rows(std::span<const int> rows, int g, double c, const Labels& init,
                                   const EmControl& control) const;

  /// Original-space log-likelihood of the selected rows under `params`
  /// (which must be in original-space units).
  [[nodiscard]] double log_likelihood_rows(std::span<const int> rows,
                                           const MixtureParams& params) const;

 private:
  FitResult fit_block(const Matrix& block, int g, double c, std::span<const int> init,
                      const EmControl& control) const;

  SymMatrix psi_;
  Matrix w_;
  Matrix w_inv_;
  Matrix whitened_;
  double log_abs_det_w_ = 0.0;
};

/// Constrained ML fit under (Ψ, c): whiten so that Ψ becomes I, run EM with
/// clipped covariance updates, map the estimates back. Without init labels,
/// control.n_starts random partitions are tried and the best likelihood kept.
FitResult fit_constrained(const Dataset& data, int g, const SymMatrix& psi, double c,
                          const EmControl& control, const std::optional<Labels>& init = {});

/// min over ordered pairs (g, h) and j of λ_j(Σ_g Σ_h⁻¹) ≥ c − 1e-10.
bool check_hathaway(const MixtureParams& params, double c);

/// √c − 1e-10 ≤ λ_j(Σ_g Ψ⁻¹) ≤ 1/√c + 1e-10 for all g, j.
bool check_generalized(const MixtureParams& params, const SymMatrix& psi, double c);

/// Stein's loss tr(ΣΨ⁻¹) − log|ΣΨ⁻¹| − J.
double stein_loss(const SymMatrix& sigma, const SymMatrix& psi);

/// Upper bound of stein_loss over the feasible set: J/√c − J·log√c − J.
double stein_bound(double c, int j);

}  // namespace eqgmm
