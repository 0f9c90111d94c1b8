#include "eqgmm/mixture.hpp"

#include <cmath>
#include <string>

#include "eqgmm/errors.hpp"

namespace eqgmm {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

struct CholeskyFactor {
  Eigen::LLT<Matrix> llt;
  double log_det = 0.0;
};

CholeskyFactor factor_covariance(const SymMatrix& cov) {
  CholeskyFactor f{Eigen::LLT<Matrix>(cov.matrix()), 0.0};
  if (f.llt.info() != Eigen::Success)
    throw NotPositiveDefinite("covariance is not positive definite");
  const Matrix& l = f.llt.matrixLLT();
  for (Eigen::Index i = 0; i < l.rows(); ++i) {
    if (!(l(i, i) > 0.0)) throw NotPositiveDefinite("covariance is not positive definite");
    f.log_det += 2.0 * std::log(l(i, i));
  }
  return f;
}

void check_shapes(const Matrix& x, const MixtureParams& params) {
  if (params.n_components() < 1) throw InvalidInput("mixture has no components");
  if (static_cast<int>(params.means.size()) != params.n_components() ||
      static_cast<int>(params.covariances.size()) != params.n_components())
    throw InvalidInput("mixture parameter arrays have inconsistent lengths");
  for (int g = 0; g < params.n_components(); ++g) {
    if (params.means[g].size() != x.cols() || params.covariances[g].dim() != x.cols())
      throw InvalidInput("data and parameter dimensions disagree");
  }
}

}  // namespace

Dataset::Dataset(Matrix x, Labels labels) : rows(std::move(x)), true_labels(std::move(labels)) {}

Dataset Dataset::subset(std::span<const int> index) const {
  Dataset out;
  out.rows.resize(static_cast<Eigen::Index>(index.size()), rows.cols());
  for (std::size_t i = 0; i < index.size(); ++i) {
    if (index[i] < 0 || index[i] >= n()) throw InvalidInput("Dataset::subset: index out of range");
    out.rows.row(static_cast<Eigen::Index>(i)) = rows.row(index[i]);
  }
  if (has_labels()) {
    out.true_labels.reserve(index.size());
    for (int i : index) out.true_labels.push_back(true_labels[i]);
  }
  return out;
}

void Dataset::validate() const {
  if (n() < 1 || dim() < 1) throw InvalidInput("dataset must have at least one row and column");
  if (!rows.allFinite()) throw InvalidInput("dataset contains non-finite values");
  if (has_labels() && static_cast<int>(true_labels.size()) != n())
    throw InvalidInput("label count does not match row count");
}

void MixtureParams::validate() const {
  const int g = n_components();
  if (g < 1) throw InvalidInput("mixture must have at least one component");
  if (static_cast<int>(means.size()) != g || static_cast<int>(covariances.size()) != g)
    throw InvalidInput("mixture parameter arrays have inconsistent lengths");
  if ((weights.array() <= 0.0).any()) throw InvalidInput("mixture weights must be positive");
  if (std::abs(weights.sum() - 1.0) > 1e-10) throw InvalidInput("mixture weights must sum to 1");
  const int j = dim();
  for (int k = 0; k < g; ++k) {
    if (means[k].size() != j || covariances[k].dim() != j)
      throw InvalidInput("component dimensions disagree");
    require_positive_definite(covariances[k], "mixture covariance");
  }
}

double gaussian_logdensity(const Vector& x, const Vector& mean, const SymMatrix& cov) {
  if (x.size() != mean.size() || mean.size() != cov.dim())
    throw InvalidInput("gaussian_logdensity: dimension mismatch");
  if (!x.allFinite() || !mean.allFinite() || !cov.matrix().allFinite())
    throw InvalidInput("gaussian_logdensity: non-finite input");
  const CholeskyFactor f = factor_covariance(cov);
  const Vector z = f.llt.matrixL().solve(x - mean);
  const double j = static_cast<double>(x.size());
  return -0.5 * j * kLog2Pi - 0.5 * f.log_det - 0.5 * z.squaredNorm();
}

Matrix weighted_log_densities(const Matrix& x, const MixtureParams& params) {
  check_shapes(x, params);
  const int g = params.n_components();
  const double j = static_cast<double>(x.cols());
  Matrix out(x.rows(), g);
  for (int k = 0; k < g; ++k) {
    const CholeskyFactor f = factor_covariance(params.covariances[k]);
    const Matrix centered = (x.rowwise() - params.means[k].transpose()).transpose();
    const Matrix z = f.llt.matrixL().solve(centered);
    out.col(k) = (-0.5 * z.colwise().squaredNorm()).transpose().array() +
                 (std::log(params.weights(k)) - 0.5 * j * kLog2Pi - 0.5 * f.log_det);
  }
  return out;
}

Vector log_sum_exp_rows(const Matrix& terms) {
  const Vector m = terms.rowwise().maxCoeff();
  Vector out(terms.rows());
  for (Eigen::Index i = 0; i < terms.rows(); ++i) {
    if (!std::isfinite(m(i))) {
      out(i) = m(i);
      continue;
    }
    out(i) = m(i) + std::log((terms.row(i).array() - m(i)).exp().sum());
  }
  return out;
}

double log_likelihood(const Dataset& data, const MixtureParams& params) {
  if (!data.rows.allFinite()) throw InvalidInput("log_likelihood: non-finite data");
  return log_sum_exp_rows(weighted_log_densities(data.rows, params)).sum();
}

ResponsibilityMatrix posteriors(const Dataset& data, const MixtureParams& params) {
  if (!data.rows.allFinite()) throw InvalidInput("posteriors: non-finite data");
  Matrix terms = weighted_log_densities(data.rows, params);
  const Vector lse = log_sum_exp_rows(terms);
  terms.colwise() -= lse;
  return ResponsibilityMatrix{terms.array().exp().matrix()};
}

Labels hard_assign(const ResponsibilityMatrix& resp) {
  Labels out(static_cast<std::size_t>(resp.n()));
  for (int i = 0; i < resp.n(); ++i) {
    int best = 0;
    for (int k = 1; k < resp.n_components(); ++k)
      if (resp.values(i, k) > resp.values(i, best)) best = k;
    out[static_cast<std::size_t>(i)] = best + 1;
  }
  return out;
}

MixtureParams transform_params(const MixtureParams& params, const Matrix& a, const Vector& b) {
  const int j = params.dim();
  if (a.rows() != j || a.cols() != j || b.size() != j)
    throw InvalidInput("transform_params: dimension mismatch");
  Eigen::FullPivLU<Matrix> lu(a);
  if (!lu.isInvertible()) throw InvalidInput("transform_params: matrix is singular");
  MixtureParams out;
  out.weights = params.weights;
  for (int k = 0; k < params.n_components(); ++k) {
    out.means.push_back(a * params.means[k] + b);
    out.covariances.emplace_back(a * params.covariances[k].matrix() * a.transpose());
  }
  return out;
}

Dataset transform_data(const Dataset& data, const Matrix& a, const Vector& b) {
  if (a.cols() != data.dim() || b.size() != a.rows())
    throw InvalidInput("transform_data: dimension mismatch");
  Matrix x = data.rows * a.transpose();
  x.rowwise() += b.transpose();
  return Dataset(std::move(x), data.true_labels);
}

Matrix one_hot(std::span<const int> labels, int g) {
  Matrix r = Matrix::Zero(static_cast<Eigen::Index>(labels.size()), g);
  for (std::size_t i = 0; i < labels.size(); ++i) {
    const int l = labels[i];
    if (l < 1 || l > g)
      throw InvalidInput("label " + std::to_string(l) + " outside 1.." + std::to_string(g));
    r(static_cast<Eigen::Index>(i), l - 1) = 1.0;
  }
  return r;
}

}  // namespace eqgmm
