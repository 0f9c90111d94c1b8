#include "eqgmm/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>

#include "eqgmm/errors.hpp"

namespace eqgmm {

double mad(const ResponsibilityMatrix& truth, const ResponsibilityMatrix& estimate) {
  if (truth.n() != estimate.n() || truth.n_components() != estimate.n_components())
    throw InvalidInput("mad: posterior matrices differ in shape");
  const int g = truth.n_components();
  if (g > kMaxMadComponents) throw InvalidInput("mad: too many components for exhaustive search");

  // cost(a, b) = Σᵢ |truth[i][a] − est[i][b]|, then an exhaustive assignment.
  Matrix cost(g, g);
  for (int a = 0; a < g; ++a)
    for (int b = 0; b < g; ++b)
      cost(a, b) = (truth.values.col(a) - estimate.values.col(b)).cwiseAbs().sum();

  std::vector<int> perm(static_cast<std::size_t>(g));
  std::iota(perm.begin(), perm.end(), 0);
  double best = std::numeric_limits<double>::infinity();
  do {
    double s = 0.0;
    for (int a = 0; a < g; ++a) s += cost(a, perm[static_cast<std::size_t>(a)]);
    best = std::min(best, s);
  } while (std::next_permutation(perm.begin(), perm.end()));
  return best;
}

double adjusted_rand(std::span<const int> a, std::span<const int> b) {
  if (a.size() != b.size()) throw InvalidInput("adjusted_rand: label vectors differ in length");
  if (a.size() < 2) throw InvalidInput("adjusted_rand: need at least two observations");

  std::map<int, int> ia, ib;
  for (int l : a) ia.try_emplace(l, static_cast<int>(ia.size()));
  for (int l : b) ib.try_emplace(l, static_cast<int>(ib.size()));
  std::vector<double> table(ia.size() * ib.size(), 0.0);
  std::vector<double> rows(ia.size(), 0.0), cols(ib.size(), 0.0);
  for (std::size_t i = 0; i < a.size(); ++i) {
    const std::size_t r = static_cast<std::size_t>(ia[a[i]]);
    const std::size_t c = static_cast<std::size_t>(ib[b[i]]);
    table[r * ib.size() + c] += 1.0;
    rows[r] += 1.0;
    cols[c] += 1.0;
  }
  auto pairs = [](double m) { return 0.5 * m * (m - 1.0); };
  double index = 0.0, sum_a = 0.0, sum_b = 0.0;
  for (double v : table) index += pairs(v);
  for (double v : rows) sum_a += pairs(v);
  for (double v : cols) sum_b += pairs(v);
  const double total = pairs(static_cast<double>(a.size()));
  // (index − E) / (max − E) with E = sum_a·sum_b/total, scaled by total so
  // numerator and denominator are integers and only one rounding happens.
  const double numerator = index * total - sum_a * sum_b;
  const double denominator = 0.5 * (sum_a + sum_b) * total - sum_a * sum_b;
  if (denominator == 0.0) {
    // Both partitions trivial (all singletons or one block).
    return numerator == 0.0 ? 1.0 : 0.0;
  }
  return numerator / denominator;
}

int count_local_maxima(std::span<const double> logliks, double tol) {
  if (logliks.empty()) throw InvalidInput("count_local_maxima: no values");
  std::vector<double> v(logliks.begin(), logliks.end());
  std::sort(v.begin(), v.end());
  int groups = 1;
  for (std::size_t i = 1; i < v.size(); ++i) {
    if (v[i] == v[i - 1]) continue;
    const double scale = 1.0 + std::max(std::abs(v[i]), std::abs(v[i - 1]));
    if (!(v[i] - v[i - 1] <= tol * scale)) ++groups;
  }
  return groups;
}

int count_local_maxima(const std::vector<FitResult>& fits, double tol) {
  std::vector<double> v;
  v.reserve(fits.size());
  for (const FitResult& f : fits) v.push_back(f.final_loglik);
  return count_local_maxima(std::span<const double>(v), tol);
}

}  // namespace eqgmm
