#include "gaussian_em.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <vector>

#include "eqgmm/errors.hpp"

namespace eqgmm::detail {

SymMatrix clip_spectrum(const Matrix& scatter, double lower, double upper) {
  Eigen::SelfAdjointEigenSolver<Matrix> eig(0.5 * (scatter + scatter.transpose()));
  if (eig.info() != Eigen::Success) throw EstimationError("eigendecomposition of scatter failed");
  const Vector l = eig.eigenvalues().cwiseMax(lower).cwiseMin(upper);
  const Matrix& q = eig.eigenvectors();
  return SymMatrix(q * l.asDiagonal() * q.transpose());
}

bool ridge_if_needed(Matrix& pooled) {
  Eigen::LLT<Matrix> llt(pooled);
  if (llt.info() == Eigen::Success && (llt.matrixLLT().diagonal().array() > 0.0).all()) return false;
  const double j = static_cast<double>(pooled.rows());
  double ridge = 1e-8 * pooled.trace() / j;
  if (!(ridge > 0.0)) ridge = 1e-8;
  pooled.diagonal().array() += ridge;
  return true;
}

Matrix weighted_scatter(const Matrix& x, const Eigen::Ref<const Vector>& r, const Vector& mean,
                        double mass) {
  const Matrix centered = x.rowwise() - mean.transpose();
  return centered.transpose() * (centered.array().colwise() * r.array()).matrix() / mass;
}

namespace {

struct MStepState {
  MixtureParams params;
  bool rescued = false;
  bool ridge = false;
};

MStepState m_step(const Matrix& x, const Matrix& resp, const CovarianceRule& rule) {
  const int n = static_cast<int>(x.rows());
  const int j = static_cast<int>(x.cols());
  const int g = static_cast<int>(resp.cols());
  const double threshold = empty_mass_threshold(j);

  MStepState st;
  MixtureParams& p = st.params;
  p.weights = Vector::Zero(g);
  p.means.assign(g, Vector::Zero(j));
  std::vector<Matrix> scatter(g);
  std::vector<bool> empty(g, false);

  Matrix pooled = Matrix::Zero(j, j);
  double live_mass = 0.0;
  for (int k = 0; k < g; ++k) {
    const double mass = resp.col(k).sum();
    if (!(mass >= threshold)) {
      empty[k] = true;
      continue;
    }
    p.weights(k) = mass / n;
    p.means[k] = x.transpose() * resp.col(k) / mass;
    scatter[k] = weighted_scatter(x, resp.col(k), p.means[k], mass);
    pooled += mass * scatter[k];
    live_mass += mass;
  }
  pooled /= live_mass;

  SymMatrix pooled_cov;
  if (rule.kind == CovarianceRule::Kind::Pooled) {
    st.ridge = ridge_if_needed(pooled);
    pooled_cov = SymMatrix(pooled);
  } else {
    pooled_cov = clip_spectrum(pooled, rule.lower, rule.upper);
  }

  p.covariances.assign(g, pooled_cov);
  if (rule.kind == CovarianceRule::Kind::Clipped) {
    for (int k = 0; k < g; ++k)
      if (!empty[k]) p.covariances[k] = clip_spectrum(scatter[k], rule.lower, rule.upper);
  }

  if (std::find(empty.begin(), empty.end(), true) == empty.end()) return st;

  // Rescue: move each empty component onto the worst-fitted observation under
  // the surviving components, with the pooled covariance.
  st.rescued = true;
  MixtureParams live;
  for (int k = 0; k < g; ++k) {
    if (empty[k]) continue;
    live.weights.conservativeResize(live.weights.size() + 1);
    live.weights(live.weights.size() - 1) = p.weights(k);
    live.means.push_back(p.means[k]);
    live.covariances.push_back(p.covariances[k]);
  }
  live.weights /= live.weights.sum();
  Vector row_ll = log_sum_exp_rows(weighted_log_densities(x, live));
  for (int k = 0; k < g; ++k) {
    if (!empty[k]) continue;
    Eigen::Index worst = 0;
    row_ll.minCoeff(&worst);
    p.means[k] = x.row(worst).transpose();
    p.covariances[k] = pooled_cov;
    p.weights(k) = 1.0 / n;
    row_ll(worst) = std::numeric_limits<double>::infinity();
  }
  p.weights /= p.weights.sum();
  return st;
}

}  // namespace

FitResult run_gaussian_em(const Matrix& x, int g, std::span<const int> init,
                          const EmControl& control, const CovarianceRule& rule) {
  control.validate();
  if (g < 1) throw InvalidInput("number of components must be >= 1");
  if (static_cast<Eigen::Index>(init.size()) != x.rows())
    throw InvalidInput("initial labels do not match the number of rows");

  FitResult out;
  Matrix resp = one_hot(init, g);
  for (int iter = 0; iter < control.max_iters; ++iter) {
    MStepState st = m_step(x, resp, rule);
    out.diagnostics.ridge_applied = out.diagnostics.ridge_applied || st.ridge;
    if (st.rescued) {
      ++out.diagnostics.rescues;
      out.loglik_trace.clear();
      if (out.diagnostics.rescues > kMaxRescues) {
        out.diagnostics.failed = true;
        out.diagnostics.message = "empty component after maximum number of rescues";
      }
    }
    out.params = std::move(st.params);

    Matrix terms = weighted_log_densities(x, out.params);
    const Vector row_ll = log_sum_exp_rows(terms);
    const double ll = row_ll.sum();
    terms.colwise() -= row_ll;
    resp = terms.array().exp().matrix();

    out.loglik_trace.push_back(ll);
    ++out.iterations;
    if (out.diagnostics.failed) break;
    const std::size_t t = out.loglik_trace.size();
    if (t >= 2 && std::abs(ll - out.loglik_trace[t - 2]) / (1.0 + std::abs(ll)) < control.rel_tol) {
      out.converged = true;
      break;
    }
  }
  out.final_loglik = out.loglik_trace.back();
  out.responsibilities = ResponsibilityMatrix{std::move(resp)};
  out.labels = hard_assign(out.responsibilities);
  return out;
}

}  // namespace eqgmm::detail
