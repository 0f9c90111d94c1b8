#include <doctest.h>

#include <cmath>
#include <random>
#include <set>

#include "eqgmm/errors.hpp"
#include "eqgmm/estimators.hpp"
#include "eqgmm/metrics.hpp"
#include "eqgmm/simulation.hpp"
#include "support.hpp"

using namespace eqgmm;
using namespace eqgmm::testing;

namespace {

bool non_decreasing(const std::vector<double>& trace, double slack = 1e-9) {
  for (std::size_t t = 1; t < trace.size(); ++t)
    if (trace[t] < trace[t - 1] - slack * (1.0 + std::abs(trace[t - 1]))) return false;
  return true;
}

Dataset two_blobs(int n_each, double gap, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> z;
  Matrix x(2 * n_each, 2);
  Labels labels;
  for (int i = 0; i < 2 * n_each; ++i) {
    const double shift = i < n_each ? 0.0 : gap;
    x(i, 0) = shift + z(rng);
    x(i, 1) = z(rng);
    labels.push_back(i < n_each ? 1 : 2);
  }
  return Dataset(x, labels);
}

// Fixed point above, with the χ² expectation by Simpson's rule.
double t_scale_factor(double beta, int j) {
  const double jd = j;
  auto chi2 = [&](double q) {
    return std::exp((0.5 * jd - 1.0) * std::log(q) - 0.5 * q - 0.5 * jd * std::log(2.0) - std::lgamma(0.5 * jd));
  };
  auto expectation = [&](double a) {
    const int steps = 20000;
    const double hi = 200.0, h = hi / steps;
    double sum = 0.0;
    for (int k = 1; k < steps; ++k) {
      const double q = k * h;
      sum += (k % 2 ? 4.0 : 2.0) * chi2(q) * q / (beta + q / a);
    }
    return sum * h / 3.0;
  };
  double a = 1.0;
  for (int it = 0; it < 200; ++it) a = (beta + jd) / jd * expectation(a);
  return a;
}

}  // namespace

TEST_CASE("EmControl validation") {
  EmControl c;
  CHECK_NOTHROW(c.validate());
  c.rel_tol = 0.0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.max_iters = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
  c = {};
  c.n_starts = 0;
  CHECK_THROWS_AS(c.validate(), InvalidInput);
}

TEST_CASE("random partitions cover every class") {
  const Labels three = random_partition_init(3, 3, 4, 17);
  CHECK(std::set<int>(three.begin(), three.end()) == std::set<int>{1, 2, 3});
  CHECK(random_partition_init(50, 3, 9, 5) == random_partition_init(50, 3, 9, 5));
  CHECK_THROWS_AS(random_partition_init(2, 3, 1, 0), InvalidInput);

  for (std::uint64_t seed = 0; seed < 1000; ++seed) {
    const Labels l = random_partition_init(100, 3, 1, seed);
    int counts[3] = {0, 0, 0};
    for (int v : l) ++counts[v - 1];
    CHECK((counts[0] > 0 && counts[1] > 0 && counts[2] > 0));
  }
  // Minimum class size J+1 is honoured even when uniform draws would often miss it.
  for (std::uint64_t seed = 0; seed < 200; ++seed) {
    const Labels l = random_partition_init(30, 3, 9, seed);
    int counts[3] = {0, 0, 0};
    for (int v : l) ++counts[v - 1];
    CHECK(*std::min_element(counts, counts + 3) >= 9);
  }
  const auto starts = random_starts(40, 2, 3, 5, 99);
  CHECK(starts.size() == 5);
  CHECK(starts[0] != starts[1]);
}

TEST_CASE("homN: closed form at g = 1") {
  std::mt19937_64 rng(1);
  const MixtureParams truth = random_params(1, 4, rng);
  const Dataset d = sample_mixture(truth, 60, rng);
  const FitResult fit = fit_homoscedastic_normal(d, 1, Labels(60, 1), EmControl{});
  const Vector mean = d.rows.colwise().mean();
  const Matrix centered = d.rows.rowwise() - mean.transpose();
  const Matrix s = centered.transpose() * centered / 60.0;
  CHECK((fit.params.means[0] - mean).cwiseAbs().maxCoeff() < 1e-10);
  CHECK((fit.params.covariances[0].matrix() - s).cwiseAbs().maxCoeff() < 1e-10);
  CHECK(fit.converged);
}

TEST_CASE("homN separates well-separated spherical clusters") {
  const Dataset d = two_blobs(40, 12.0, 3);
  EmControl control;
  control.seed = 4;
  const FitResult fit = fit_homoscedastic_normal(d, 2, control);
  CHECK(adjusted_rand(d.true_labels, fit.labels) == doctest::Approx(1.0));
  CHECK(non_decreasing(fit.loglik_trace));
  CHECK(fit.labels == hard_assign(fit.responsibilities));
  // Pooled covariance is shared.
  CHECK(fit.params.covariances[0].matrix() == fit.params.covariances[1].matrix());
}

TEST_CASE("hetN: pinned bounds and inactive bounds") {
  const Dataset d = two_blobs(30, 6.0, 5);
  const Labels init = random_partition_init(60, 2, 3, 8);
  const FitResult pinned = fit_heteroscedastic_bounded(d, 2, 1.0, 1.0, init, EmControl{});
  for (const SymMatrix& s : pinned.params.covariances)
    CHECK((s.matrix() - Matrix::Identity(2, 2)).cwiseAbs().maxCoeff() < 1e-12);

  const FitResult wide = fit_heteroscedastic_bounded(d, 2, kHetLowerBound, kHetUpperBound, init, EmControl{});
  const FitResult wider = fit_heteroscedastic_bounded(d, 2, 1e-12, 1e12, init, EmControl{});
  CHECK(wide.final_loglik == doctest::Approx(wider.final_loglik).epsilon(1e-12));
  CHECK(non_decreasing(wide.loglik_trace));
  CHECK_THROWS_AS(fit_heteroscedastic_bounded(d, 2, 2.0, 1.0, init, EmControl{}), InvalidInput);
}

TEST_CASE("homt: covariance convention, outlier down-weighting, large-dof limit") {
  std::mt19937_64 rng(6);
  MixtureParams one = random_params(1, 3, rng);
  const Dataset big = sample_mixture(one, 5000, rng);
  const auto [tp, tfit] = fit_homoscedastic_t(big, 1, 4.0, Labels(5000, 1), EmControl{});
  const Vector mean = big.rows.colwise().mean();
  const Matrix centered = big.rows.rowwise() - mean.transpose();
  const Matrix s = centered.transpose() * centered / 5000.0;
  // For Gaussian data the t fit's scale is a·S, where a solves
  // a = (β + J)/J · E[q / (β + q/a)] with q ~ χ²_J; it is not (β − 2)/β.
  const double a = t_scale_factor(4.0, 3);
  CHECK(a > 0.6);
  const Matrix expected = a * s;
  CHECK((tp.scale.matrix() - expected).norm() / expected.norm() < 0.05);
  CHECK((tp.covariance().matrix() - 2.0 * tp.scale.matrix()).cwiseAbs().maxCoeff() < 1e-14);
  CHECK(non_decreasing(tfit.loglik_trace));

  Dataset blobs = two_blobs(25, 8.0, 7);
  blobs.rows(0, 0) = 60.0;  // far outlier
  const Labels init = random_partition_init(50, 2, 3, 1);
  const auto [sp, sfit] = fit_homoscedastic_t(blobs, 2, 4.0, init, EmControl{});
  const Matrix w = t_precision_weights(blobs, sp);
  CHECK(w.row(0).maxCoeff() < 1.0);
  CHECK(non_decreasing(sfit.loglik_trace));
  CHECK(sfit.final_loglik == doctest::Approx(t_mixture_log_likelihood(blobs, sp)).epsilon(1e-10));

  const Dataset plain = two_blobs(40, 5.0, 9);
  const Labels start = random_partition_init(80, 2, 3, 2);
  const auto [lp, lfit] = fit_homoscedastic_t(plain, 2, 1e6, start, EmControl{});
  const FitResult normal = fit_homoscedastic_normal(plain, 2, start, EmControl{});
  for (int k = 0; k < 2; ++k) CHECK((lp.means[k] - normal.params.means[k]).cwiseAbs().maxCoeff() < 1e-3);
  CHECK_THROWS_AS(fit_homoscedastic_t(plain, 2, 2.0, start, EmControl{}), InvalidInput);
}

TEST_CASE("every estimator is monotone on generated instances") {
  SimScenario sc;
  sc.n = 50;
  sc.j = 5;
  for (int rep = 0; rep < 6; ++rep) {
    const GeneratedSample s = generate_dataset(sc, rep);
    const auto starts = random_starts(sc.n, 3, sc.j + 1, 3, 100 + rep);
    for (const Labels& init : starts) {
      CHECK(non_decreasing(fit_homoscedastic_normal(s.data, 3, init, EmControl{}).loglik_trace));
      CHECK(non_decreasing(
          fit_heteroscedastic_bounded(s.data, 3, kHetLowerBound, kHetUpperBound, init, EmControl{}).loglik_trace));
      CHECK(non_decreasing(fit_homoscedastic_t(s.data, 3, 4.0, init, EmControl{}).second.loglik_trace));
    }
  }
}

TEST_CASE("best_by_loglik skips failures") {
  std::vector<FitResult> fits(3);
  fits[0].final_loglik = -10.0;
  fits[1].final_loglik = -1.0;
  fits[1].diagnostics.failed = true;
  fits[2].final_loglik = -5.0;
  CHECK(best_by_loglik(fits) == 2);
  for (auto& f : fits) f.diagnostics.failed = true;
  CHECK(best_by_loglik(fits) == -1);
}
