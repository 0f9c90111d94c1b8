#include "eqgmm/estimators.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <string>

#include "eqgmm/errors.hpp"
#include "eqgmm/rng.hpp"
#include "gaussian_em.hpp"

namespace eqgmm {

void EmControl::validate() const {
  if (max_iters < 1) throw InvalidInput("max_iters must be >= 1");
  if (!(rel_tol > 0.0)) throw InvalidInput("rel_tol must be positive");
  if (n_starts < 1) throw InvalidInput("n_starts must be >= 1");
}

SymMatrix StudentTParams::covariance() const {
  return SymMatrix(scale.matrix() * (dof / (dof - 2.0)));
}

Labels random_partition_init(int n, int g, int min_size, std::uint64_t seed) {
  if (g < 1) throw InvalidInput("random_partition_init: g must be >= 1");
  if (n < g) throw InvalidInput("random_partition_init: fewer rows than components");
  min_size = std::clamp(min_size, 1, n / g);

  Rng rng(seed);
  std::uniform_int_distribution<int> pick_class(1, g);
  Labels labels(static_cast<std::size_t>(n));
  std::vector<int> counts(static_cast<std::size_t>(g) + 1);

  auto draw = [&] {
    std::fill(counts.begin(), counts.end(), 0);
    for (int& l : labels) {
      l = pick_class(rng);
      ++counts[static_cast<std::size_t>(l)];
    }
    return *std::min_element(counts.begin() + 1, counts.end()) >= min_size;
  };

  constexpr int kMaxRedraws = 100;
  for (int attempt = 0; attempt < kMaxRedraws; ++attempt)
    if (draw()) return labels;

  // Top up short classes from rows of classes with members to spare.
  std::uniform_int_distribution<int> pick_row(0, n - 1);
  for (int k = 1; k <= g; ++k) {
    while (counts[static_cast<std::size_t>(k)] < min_size) {
      int& l = labels[static_cast<std::size_t>(pick_row(rng))];
      if (l == k || counts[static_cast<std::size_t>(l)] <= min_size) continue;
      --counts[static_cast<std::size_t>(l)];
      l = k;
      ++counts[static_cast<std::size_t>(k)];
    }
  }
  return labels;
}

std::vector<Labels> random_starts(int n, int g, int min_size, int n_starts, std::uint64_t seed) {
  std::vector<Labels> starts;
  starts.reserve(static_cast<std::size_t>(n_starts));
  for (int s = 0; s < n_starts; ++s)
    starts.push_back(random_partition_init(n, g, min_size,
                                           derive_seed(seed, {kStreamStarts, std::uint64_t(s)})));
  return starts;
}

int best_by_loglik(const std::vector<FitResult>& fits) {
  int best = -1;
  for (int i = 0; i < static_cast<int>(fits.size()); ++i) {
    const FitResult& f = fits[static_cast<std::size_t>(i)];
    if (f.diagnostics.failed || !std::isfinite(f.final_loglik)) continue;
    if (best < 0 || f.final_loglik > fits[static_cast<std::size_t>(best)].final_loglik) best = i;
  }
  return best;
}

namespace {

void check_fit_inputs(const Dataset& data, int g, const Labels& init) {
  data.validate();
  if (g < 1) throw InvalidInput("number of components must be >= 1");
  if (data.n() <= g) throw InvalidInput("need more observations than components");
  if (static_cast<int>(init.size()) != data.n())
    throw InvalidInput("initial labels do not match the number of rows");
}

template <class FitOne>
FitResult best_of_random_starts(const Dataset& data, int g, const EmControl& control,
                                FitOne&& fit_one) {
  control.validate();
  const auto starts = random_starts(data.n(), g, data.dim() + 1, control.n_starts, control.seed);
  std::vector<FitResult> fits;
  fits.reserve(starts.size());
  for (std::size_t s = 0; s < starts.size(); ++s) {
    fits.push_back(fit_one(starts[s]));
    fits.back().start_index = static_cast<int>(s);
  }
  const int best = best_by_loglik(fits);
  if (best < 0) throw EstimationError("every random start failed");
  return std::move(fits[static_cast<std::size_t>(best)]);
}

// ---- Student-t ECM -------------------------------------------------------

struct TTerms {
  Matrix log_terms;  // log p_g + log t(xᵢ; μ_g, Ξ, dof)
  Matrix mahal;      // δ_ig
};

TTerms t_terms(const Matrix& x, const Vector& weights, const std::vector<Vector>& means,
               const Matrix& scale, double dof) {
  Eigen::LLT<Matrix> llt(scale);
  if (llt.info() != Eigen::Success) throw NotPositiveDefinite("t scale matrix is not positive definite");
  const double j = static_cast<double>(x.cols());
  double log_det = 0.0;
  for (Eigen::Index i = 0; i < scale.rows(); ++i) log_det += 2.0 * std::log(llt.matrixLLT()(i, i));
  const double log_norm = std::lgamma(0.5 * (dof + j)) - std::lgamma(0.5 * dof) -
                          0.5 * j * std::log(dof * M_PI) - 0.5 * log_det;

  const int g = static_cast<int>(weights.size());
  TTerms t{Matrix(x.rows(), g), Matrix(x.rows(), g)};
  for (int k = 0; k < g; ++k) {
    const Matrix centered = (x.rowwise() - means[static_cast<std::size_t>(k)].transpose()).transpose();
    const Matrix z = llt.matrixL().solve(centered);
    t.mahal.col(k) = z.colwise().squaredNorm().transpose();
    t.log_terms.col(k) = (-0.5 * (dof + j) * (t.mahal.col(k).array() / dof).log1p()) +
                         (std::log(weights(k)) + log_norm);
  }
  return t;
}

std::pair<StudentTParams, FitResult> run_t_em(const Matrix& x, int g, double dof,
                                              std::span<const int> init, const EmControl& control) {
  control.validate();
  const int n = static_cast<int>(x.rows());
  const int j = static_cast<int>(x.cols());
  const double threshold = detail::empty_mass_threshold(j);

  StudentTParams tp;
  tp.dof = dof;
  FitResult out;
  Matrix resp = one_hot(init, g);
  Matrix w = Matrix::Ones(n, g);

  for (int iter = 0; iter < control.max_iters; ++iter) {
    tp.weights = Vector::Zero(g);
    tp.means.assign(static_cast<std::size_t>(g), Vector::Zero(j));
    std::vector<int> empty;
    Matrix scale = Matrix::Zero(j, j);
    for (int k = 0; k < g; ++k) {
      const double mass = resp.col(k).sum();
      if (!(mass >= threshold)) {
        empty.push_back(k);
        continue;
      }
      const Vector uw = resp.col(k).cwiseProduct(w.col(k));
      const double uw_sum = uw.sum();
      tp.weights(k) = mass / n;
      tp.means[static_cast<std::size_t>(k)] = x.transpose() * uw / uw_sum;
      scale += uw_sum * detail::weighted_scatter(x, uw, tp.means[static_cast<std::size_t>(k)], uw_sum);
    }
    scale /= n;
    out.diagnostics.ridge_applied = detail::ridge_if_needed(scale) || out.diagnostics.ridge_applied;
    tp.scale = SymMatrix(scale);

    if (!empty.empty()) {
      ++out.diagnostics.rescues;
      out.loglik_trace.clear();
      Vector live_w = tp.weights;
      for (int k : empty) live_w(k) = 0.0;
      live_w /= live_w.sum();
      Matrix terms = t_terms(x, live_w.cwiseMax(1e-300), tp.means, tp.scale.matrix(), dof).log_terms;
      for (int k : empty) terms.col(k).setConstant(-std::numeric_limits<double>::infinity());
      Vector row_ll = log_sum_exp_rows(terms);
      for (int k : empty) {
        Eigen::Index worst = 0;
        row_ll.minCoeff(&worst);
        tp.means[static_cast<std::size_t>(k)] = x.row(worst).transpose();
        tp.weights(k) = 1.0 / n;
        row_ll(worst) = std::numeric_limits<double>::infinity();
      }
      tp.weights /= tp.weights.sum();
      if (out.diagnostics.rescues > detail::kMaxRescues) {
        out.diagnostics.failed = true;
        out.diagnostics.message = "empty component after maximum number of rescues";
      }
    }

    TTerms t = t_terms(x, tp.weights, tp.means, tp.scale.matrix(), dof);
    const Vector row_ll = log_sum_exp_rows(t.log_terms);
    const double ll = row_ll.sum();
    t.log_terms.colwise() -= row_ll;
    resp = t.log_terms.array().exp().matrix();
    w = ((dof + j) / (dof + t.mahal.array())).matrix();

    out.loglik_trace.push_back(ll);
    ++out.iterations;
    if (out.diagnostics.failed) break;
    const std::size_t s = out.loglik_trace.size();
    if (s >= 2 && std::abs(ll - out.loglik_trace[s - 2]) / (1.0 + std::abs(ll)) < control.rel_tol) {
      out.converged = true;
      break;
    }
  }

  out.final_loglik = out.loglik_trace.back();
  out.responsibilities = ResponsibilityMatrix{std::move(resp)};
  out.labels = hard_assign(out.responsibilities);
  out.params.weights = tp.weights;
  out.params.means = tp.means;
  out.params.covariances.assign(static_cast<std::size_t>(g), tp.covariance());
  return {std::move(tp), std::move(out)};
}

}  // namespace

FitResult fit_homoscedastic_normal(const Dataset& data, int g, const Labels& init,
                                   const EmControl& control) {
  check_fit_inputs(data, g, init);
  return detail::run_gaussian_em(data.rows, g, init, control,
                                 {detail::CovarianceRule::Kind::Pooled, 0.0, 0.0});
}

FitResult fit_homoscedastic_normal(const Dataset& data, int g, const EmControl& control) {
  return best_of_random_starts(data, g, control, [&](const Labels& start) {
    return fit_homoscedastic_normal(data, g, start, control);
  });
}

FitResult fit_heteroscedastic_bounded(const Dataset& data, int g, double lower, double upper,
                                      const Labels& init, const EmControl& control) {
  check_fit_inputs(data, g, init);
  if (!(lower > 0.0) || !(upper >= lower))
    throw InvalidInput("eigenvalue bounds must satisfy 0 < lower <= upper");
  return detail::run_gaussian_em(data.rows, g, init, control,
                                 {detail::CovarianceRule::Kind::Clipped, lower, upper});
}

FitResult fit_heteroscedastic_bounded(const Dataset& data, int g, double lower, double upper,
                                      const EmControl& control) {
  return best_of_random_starts(data, g, control, [&](const Labels& start) {
    return fit_heteroscedastic_bounded(data, g, lower, upper, start, control);
  });
}

std::pair<StudentTParams, FitResult> fit_homoscedastic_t(const Dataset& data, int g, double dof,
                                                         const Labels& init,
                                                         const EmControl& control) {
  check_fit_inputs(data, g, init);
  if (!(dof > 2.0)) throw InvalidInput("degrees of freedom must exceed 2");
  return run_t_em(data.rows, g, dof, init, control);
}

std::pair<StudentTParams, FitResult> fit_homoscedastic_t(const Dataset& data, int g, double dof,
                                                         const EmControl& control) {
  control.validate();
  const auto starts = random_starts(data.n(), g, data.dim() + 1, control.n_starts, control.seed);
  std::vector<std::pair<StudentTParams, FitResult>> fits;
  std::vector<FitResult> results;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    fits.push_back(fit_homoscedastic_t(data, g, dof, starts[s], control));
    fits.back().second.start_index = static_cast<int>(s);
    results.push_back(fits.back().second);
  }
  const int best = best_by_loglik(results);
  if (best < 0) throw EstimationError("every random start failed");
  return std::move(fits[static_cast<std::size_t>(best)]);
}

double t_mixture_log_likelihood(const Dataset& data, const StudentTParams& params) {
  return log_sum_exp_rows(
             t_terms(data.rows, params.weights, params.means, params.scale.matrix(), params.dof)
                 .log_terms)
      .sum();
}

Matrix t_precision_weights(const Dataset& data, const StudentTParams& params) {
  const Matrix mahal =
      t_terms(data.rows, params.weights, params.means, params.scale.matrix(), params.dof).mahal;
  const double j = static_cast<double>(data.dim());
  return ((params.dof + j) / (params.dof + mahal.array())).matrix();
}

}  // namespace eqgmm
