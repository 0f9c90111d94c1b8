#pragma once

#include <span>

#include "eqgmm/estimators.hpp"

namespace eqgmm::detail {

/// How the M-step turns the weighted scatter matrices S_g into covariances.
struct CovarianceRule {
  enum class Kind { Pooled, Clipped };
  Kind kind = Kind::Pooled;
  // Clipped: eigenvalues of each S_g are clamped into [lower, upper].
  double lower = 0.0;
  double upper = 0.0;
};

inline constexpr int kMaxRescues = 3;

/// Empty-component threshold on Σᵢ u_ig, J·1e-8.
inline double empty_mass_threshold(int dim) { return dim * 1e-8; }

/// Q diag(clamp(l, lower, upper)) Qᵀ for scatter = Q diag(l) Qᵀ.
SymMatrix clip_spectrum(const Matrix& scatter, double lower, double upper);

/// Gaussian-mixture EM on a raw n×J block, started with an M-step on the
/// one-hot responsibilities of `init` (1-based labels).
FitResult run_gaussian_em(const Matrix& x, int g, std::span<const int> init,
                          const EmControl& control, const CovarianceRule& rule);

/// Adds 1e-8·trace/J to the diagonal if the matrix fails Cholesky. Returns
/// true if the ridge was applied.
bool ridge_if_needed(Matrix& pooled);

/// Weighted scatter Σᵢ rᵢ (xᵢ − μ)(xᵢ − μ)ᵀ / Σᵢ rᵢ.
Matrix weighted_scatter(const Matrix& x, const Eigen::Ref<const Vector>& r, const Vector& mean,
                        double mass);

}  // namespace eqgmm::detail
