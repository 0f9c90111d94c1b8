#include "eqgmm/constrained.hpp"

#include <cmath>
#include <string>

#include "eqgmm/errors.hpp"
#include "gaussian_em.hpp"

namespace eqgmm {

namespace {

constexpr double kPredicateSlack = 1e-10;

void check_scale_balance(double c) {
  if (!(c > 0.0 && c <= 1.0))
    throw InvalidInput("scale balance c must lie in (0, 1], got " + std::to_string(c));
}

}  // namespace

void ConstraintSpec::validate() const {
  check_scale_balance(scale_balance);
  require_positive_definite(target, "constraint target");
}

SymMatrix psi_target(const Dataset& data, int g, PsiKind kind, const EmControl& control) {
  control.validate();
  const auto starts = random_starts(data.n(), g, data.dim() + 1, control.n_starts, control.seed);
  return psi_target(data, g, kind, starts, control);
}

SymMatrix psi_target(const Dataset& data, int g, PsiKind kind, std::span<const Labels> starts,
                     const EmControl& control) {
  data.validate();
  if (g < 1) throw InvalidInput("number of components must be >= 1");

  switch (kind.kind) {
    case PsiKind::Kind::SampleCovariance: {
      const Vector mean = data.rows.colwise().mean();
      const Matrix centered = data.rows.rowwise() - mean.transpose();
      return SymMatrix(centered.transpose() * centered / static_cast<double>(data.n()));
    }
    case PsiKind::Kind::HomoscedasticNormal: {
      std::vector<FitResult> fits;
      for (const Labels& s : starts) fits.push_back(fit_homoscedastic_normal(data, g, s, control));
      const int best = best_by_loglik(fits);
      if (best < 0) throw EstimationError("psi_target: every homoscedastic normal start failed");
      return fits[static_cast<std::size_t>(best)].params.covariances.front();
    }
    case PsiKind::Kind::HomoscedasticT: {
      if (!(kind.dof > 2.0)) throw InvalidInput("psi_target: t degrees of freedom must exceed 2");
      std::vector<FitResult> fits;
      std::vector<SymMatrix> scales;
      for (const Labels& s : starts) {
        auto [tp, fit] = fit_homoscedastic_t(data, g, kind.dof, s, control);
        scales.push_back(tp.scale);
        fits.push_back(std::move(fit));
      }
      const int best = best_by_loglik(fits);
      if (best < 0) throw EstimationError("psi_target: every homoscedastic t start failed");
      const double factor = kind.dof / (kind.dof - 2.0);
      return SymMatrix(factor * scales[static_cast<std::size_t>(best)].matrix());
    }
  }
  throw InvalidInput("psi_target: unknown target kind");
}

Vector clip_eigenvalues(const Vector& l, double c) {
  check_scale_balance(c);
  const double lo = std::sqrt(c);
  return l.cwiseMax(lo).cwiseMin(1.0 / lo);
}

SymMatrix constrained_cov_update(const SymMatrix& scatter, double c) {
  check_scale_balance(c);
  const SpectralDecomp d = sym_eig(scatter);
  const Vector clipped = clip_eigenvalues(d.eigenvalues, c);
  return SymMatrix(d.basis * clipped.asDiagonal() * d.basis.transpose());
}

// ---- WhitenedProblem -------------------------------------------------------

WhitenedProblem::WhitenedProblem(const Dataset& data, SymMatrix psi) : psi_(std::move(psi)) {
  data.validate();
  if (psi_.dim() != data.dim()) throw InvalidInput("target dimension does not match the data");
  w_ = whitening(psi_);
  // W = L^{-1/2} Qᵀ, so W⁻¹ = Q L^{1/2}.
  const SpectralDecomp d = sym_eig(psi_);
  w_inv_ = d.basis * d.eigenvalues.cwiseSqrt().asDiagonal();
  whitened_ = data.rows * w_.transpose();
  log_abs_det_w_ = -0.5 * d.eigenvalues.array().log().sum();
}

FitResult WhitenedProblem::fit_block(const Matrix& block, int g, double c,
                                     std::span<const int> init, const EmControl& control) const {
  check_scale_balance(c);
  if (g < 1) throw InvalidInput("number of components must be >= 1");
  if (block.rows() <= g) throw InvalidInput("need more observations than components");
  const double lo = std::sqrt(c);
  FitResult r = detail::run_gaussian_em(block, g, init, control,
                                        {detail::CovarianceRule::Kind::Clipped, lo, 1.0 / lo});

  // Back to original coordinates. Responsibilities are unchanged by the
  // change of variables; log-likelihoods gain n·log|det W|.
  const double shift = static_cast<double>(block.rows()) * log_abs_det_w_;
  for (double& v : r.loglik_trace) v += shift;
  r.final_loglik += shift;
  for (int k = 0; k < g; ++k) {
    r.params.means[static_cast<std::size_t>(k)] = w_inv_ * r.params.means[static_cast<std::size_t>(k)];
    r.params.covariances[static_cast<std::size_t>(k)] =
        SymMatrix(w_inv_ * r.params.covariances[static_cast<std::size_t>(k)].matrix() * w_inv_.transpose());
  }
  r.c_used = c;
  r.psi_used = psi_;
  return r;
}

FitResult WhitenedProblem::fit(int g, double c, const Labels& init, const EmControl& control) const {
  if (static_cast<int>(init.size()) != n())
    throw InvalidInput("initial labels do not match the number of rows");
  return fit_block(whitened_, g, c, init, control);
}

FitResult WhitenedProblem::fit_rows(std::span<const int> rows, int g, double c, const Labels& init,
                                    const EmControl& control) const {
  if (init.size() != rows.size()) throw InvalidInput("initial labels do not match the row subset");
  Matrix block(static_cast<Eigen::Index>(rows.size()), whitened_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n()) throw InvalidInput("row index out of range");
    block.row(static_cast<Eigen::Index>(i)) = whitened_.row(rows[i]);
  }
  return fit_block(block, g, c, init, control);
}

double WhitenedProblem::log_likelihood_rows(std::span<const int> rows,
                                            const MixtureParams& params) const {
  // Evaluate in whitened coordinates: μ* = Wμ, Σ* = WΣWᵀ.
  MixtureParams white = transform_params(params, w_, Vector::Zero(dim()));
  Matrix block(static_cast<Eigen::Index>(rows.size()), whitened_.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    if (rows[i] < 0 || rows[i] >= n()) throw InvalidInput("row index out of range");
    block.row(static_cast<Eigen::Index>(i)) = whitened_.row(rows[i]);
  }
  return log_sum_exp_rows(weighted_log_densities(block, white)).sum() +
         static_cast<double>(rows.size()) * log_abs_det_w_;
}

FitResult fit_constrained(const Dataset& data, int g, const SymMatrix& psi, double c,
                          const EmControl& control, const std::optional<Labels>& init) {
  control.validate();
  ConstraintSpec{psi, c}.validate();
  const WhitenedProblem problem(data, psi);
  if (init) return problem.fit(g, c, *init, control);

  const auto starts = random_starts(data.n(), g, data.dim() + 1, control.n_starts, control.seed);
  std::vector<FitResult> fits;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    fits.push_back(problem.fit(g, c, starts[s], control));
    fits.back().start_index = static_cast<int>(s);
  }
  const int best = best_by_loglik(fits);
  if (best < 0) throw EstimationError("every random start failed");
  return std::move(fits[static_cast<std::size_t>(best)]);
}

// ---- predicates and Stein's loss ------------------------------------------

bool check_hathaway(const MixtureParams& params, double c) {
  const int g = params.n_components();
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b) {
      if (a == b) continue;
      const Vector l = generalized_eigvals(params.covariances[static_cast<std::size_t>(a)],
                                           params.covariances[static_cast<std::size_t>(b)]);
      if (l.minCoeff() < c - kPredicateSlack) return false;
    }
  return true;
}

bool check_generalized(const MixtureParams& params, const SymMatrix& psi, double c) {
  const double lo = std::sqrt(c);
  for (const SymMatrix& sigma : params.covariances) {
    const Vector l = generalized_eigvals(sigma, psi);
    if (l.minCoeff() < lo - kPredicateSlack || l.maxCoeff() > 1.0 / lo + kPredicateSlack) return false;
  }
  return true;
}

double stein_loss(const SymMatrix& sigma, const SymMatrix& psi) {
  require_positive_definite(sigma, "stein_loss");
  const Vector l = generalized_eigvals(sigma, psi);
  return (l.array() - l.array().log()).sum() - static_cast<double>(l.size());
}

double stein_bound(double c, int j) {
  check_scale_balance(c);
  if (j < 1) throw InvalidInput("stein_bound: dimension must be >= 1");
  const double jd = static_cast<double>(j);
  const double root = std::sqrt(c);
  return jd / root - jd * std::log(root) - jd;
}

}  // namespace eqgmm
