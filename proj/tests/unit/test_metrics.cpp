#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "eqgmm/errors.hpp"
#include "eqgmm/metrics.hpp"

using namespace eqgmm;

namespace {

// Rand-type counts by enumerating all pairs, combined in exact integer
// arithmetic so the only rounding is the final division.
double pair_counting_ari(const std::vector<int>& a, const std::vector<int>& b) {
  const std::size_t n = a.size();
  long long both = 0, same_a = 0, same_b = 0;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = i + 1; j < n; ++j) {
      const bool sa = a[i] == a[j], sb = b[i] == b[j];
      both += sa && sb;
      same_a += sa;
      same_b += sb;
    }
  const long long pairs = static_cast<long long>(n * (n - 1) / 2);
  const long long num = 2 * pairs * both - 2 * same_a * same_b;
  const long long den = pairs * (same_a + same_b) - 2 * same_a * same_b;
  if (den == 0) return num == 0 ? 1.0 : 0.0;
  return static_cast<double>(num) / static_cast<double>(den);
}

ResponsibilityMatrix random_posteriors(int n, int g, std::mt19937_64& rng) {
  std::gamma_distribution<double> gam(0.5, 1.0);
  Matrix m(n, g);
  for (int i = 0; i < n; ++i) {
    for (int k = 0; k < g; ++k) m(i, k) = gam(rng) + 1e-12;
    m.row(i) /= m.row(i).sum();
  }
  return {m};
}

ResponsibilityMatrix permute_columns(const ResponsibilityMatrix& r, const std::vector<int>& perm) {
  Matrix m(r.n(), r.n_components());
  for (int k = 0; k < r.n_components(); ++k) m.col(k) = r.values.col(perm[k]);
  return {m};
}

int union_find_groups(const std::vector<double>& v, double tol) {
  std::vector<int> parent(v.size());
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[x] != x) x = parent[x] = parent[parent[x]];
    return x;
  };
  for (std::size_t i = 0; i < v.size(); ++i)
    for (std::size_t j = 0; j < v.size(); ++j)
      if (std::abs(v[i] - v[j]) <= tol * (1.0 + std::max(std::abs(v[i]), std::abs(v[j]))))
        parent[find(static_cast<int>(i))] = find(static_cast<int>(j));
  int groups = 0;
  for (std::size_t i = 0; i < v.size(); ++i) groups += find(static_cast<int>(i)) == static_cast<int>(i);
  return groups;
}

}  // namespace

TEST_CASE("adjusted_rand pinned values") {
  const std::vector<int> a{1, 1, 2, 2}, b{1, 2, 1, 2};
  CHECK(adjusted_rand(a, b) == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(adjusted_rand(a, a) == 1.0);
  const std::vector<int> renamed{7, 7, -3, -3};
  CHECK(adjusted_rand(a, renamed) == 1.0);
  const std::vector<int> one{1, 1, 1, 1}, singles{1, 2, 3, 4};
  CHECK(adjusted_rand(one, one) == 1.0);
  CHECK(adjusted_rand(singles, singles) == 1.0);
  CHECK(adjusted_rand(one, singles) == 0.0);
  CHECK_THROWS_AS(adjusted_rand(a, std::vector<int>{1, 2}), InvalidInput);
}

TEST_CASE("adjusted_rand matches pair counting and is symmetric") {
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 300; ++trial) {
    std::uniform_int_distribution<int> size(2, 30), lab(1, 1 + trial % 5);
    const int n = size(rng);
    std::vector<int> a(n), b(n);
    for (int i = 0; i < n; ++i) {
      a[i] = lab(rng);
      b[i] = lab(rng);
    }
    const double ari = adjusted_rand(a, b);
    CHECK(ari == pair_counting_ari(a, b));
    CHECK(ari == adjusted_rand(b, a));
    CHECK(ari <= 1.0);
    CHECK(ari >= -1.0);
  }
}

TEST_CASE("mad pinned values") {
  Matrix t(2, 2), e(2, 2);
  t << 1, 0, 0, 1;
  e << 0.6, 0.4, 0.4, 0.6;
  CHECK(mad({t}, {e}) == doctest::Approx(1.6).epsilon(1e-15));
  CHECK(mad({t}, {t}) == 0.0);
  Matrix swapped(2, 2);
  swapped << 0, 1, 1, 0;
  CHECK(mad({t}, {swapped}) == 0.0);
  CHECK_THROWS_AS(mad({t}, {Matrix(3, 2)}), InvalidInput);
  CHECK_THROWS_AS(mad({Matrix::Zero(2, 9)}, {Matrix::Zero(2, 9)}), InvalidInput);
}

TEST_CASE("mad matches exhaustive recomputation and its symmetries") {
  std::mt19937_64 rng(2);
  for (int trial = 0; trial < 60; ++trial) {
    const int g = 1 + trial % 5, n = 5 + trial;
    const ResponsibilityMatrix a = random_posteriors(n, g, rng), b = random_posteriors(n, g, rng);
    std::vector<int> perm(g);
    std::iota(perm.begin(), perm.end(), 0);
    double oracle = std::numeric_limits<double>::infinity();
    do {
      double s = 0.0;
      for (int k = 0; k < g; ++k) s += (a.values.col(k) - b.values.col(perm[k])).cwiseAbs().sum();
      oracle = std::min(oracle, s);
    } while (std::next_permutation(perm.begin(), perm.end()));
    CHECK(mad(a, b) == oracle);
    CHECK(mad(a, b) == doctest::Approx(mad(b, a)).epsilon(1e-14));
    std::shuffle(perm.begin(), perm.end(), rng);
    CHECK(mad(permute_columns(a, perm), permute_columns(b, perm)) == doctest::Approx(mad(a, b)).epsilon(1e-14));
    CHECK(mad(a, permute_columns(a, perm)) < 1e-12);
  }
}

TEST_CASE("count_local_maxima") {
  CHECK(count_local_maxima(std::vector<double>(10, -123.456)) == 1);
  CHECK(count_local_maxima(std::vector<double>{0.0, 100.0}) == 2);
  CHECK(count_local_maxima(std::vector<double>{-5.0}) == 1);
  CHECK_THROWS_AS(count_local_maxima(std::vector<double>{}), InvalidInput);

  std::mt19937_64 rng(3);
  std::uniform_int_distribution<int> centre(0, 4);
  std::normal_distribution<double> jitter(0.0, 1e-5);
  for (int trial = 0; trial < 100; ++trial) {
    std::vector<double> v;
    for (int i = 0; i < 12; ++i) v.push_back(-100.0 * centre(rng) - 50.0 + jitter(rng) * (trial % 3));
    CHECK(count_local_maxima(v) == union_find_groups(v, 1e-6));
  }

  std::vector<FitResult> fits(3);
  fits[0].final_loglik = -10.0;
  fits[1].final_loglik = -10.0;
  fits[2].final_loglik = -20.0;
  CHECK(count_local_maxima(fits) == 2);
}
