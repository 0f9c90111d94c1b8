#include "eqgmm/cross_validation.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <numeric>
#include <random>
#include <string>

#include "eqgmm/errors.hpp"
#include "eqgmm/rng.hpp"

namespace eqgmm {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

void check_grid(std::span<const double> grid) {
  if (grid.empty()) throw InvalidInput("c grid is empty");
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if (!(grid[i] > 0.0 && grid[i] <= 1.0)) throw InvalidInput("c grid values must lie in (0, 1]");
    if (i > 0 && !(grid[i] > grid[i - 1])) throw InvalidInput("c grid must be strictly ascending");
  }
}

Labels restrict(const Labels& init, std::span<const int> rows) {
  Labels out;
  out.reserve(rows.size());
  for (int i : rows) out.push_back(init[static_cast<std::size_t>(i)]);
  return out;
}

}  // namespace

void CvPlan::validate(int rows) const {
  if (n != rows) throw InvalidInput("CV plan was built for a different number of rows");
  if (splits.empty()) throw InvalidInput("CV plan has no splits");
  for (const CvSplit& s : splits) {
    if (s.train.empty() || s.test.empty()) throw InvalidInput("CV split with an empty side");
    for (int i : s.train)
      if (i < 0 || i >= n) throw InvalidInput("CV split index out of range");
    for (int i : s.test)
      if (i < 0 || i >= n) throw InvalidInput("CV split index out of range");
  }
}

std::vector<double> CvConfig::grid() const { return c_grid.empty() ? default_c_grid() : c_grid; }

std::vector<double> default_c_grid() { return {0.01, 0.025, 0.0632, 0.158, 0.398, 0.95}; }

CvPlan make_splits(int n, int k, double test_fraction, std::uint64_t seed) {
  if (n < 10) throw InvalidInput("make_splits: need at least 10 rows");
  if (k < 1) throw InvalidInput("make_splits: need at least one split");
  if (!(test_fraction > 0.0 && test_fraction <= 0.5))
    throw InvalidInput("make_splits: test fraction must lie in (0, 0.5]");
  const int n_test = static_cast<int>(std::lround(n * test_fraction));
  if (n_test < 1) throw InvalidInput("make_splits: test set would be empty");

  CvPlan plan{n, k, test_fraction, seed, {}};
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (int s = 0; s < k; ++s) {
    Rng rng(derive_seed(seed, {kStreamSplits, std::uint64_t(s)}));
    std::iota(perm.begin(), perm.end(), 0);
    // Partial Fisher–Yates: the first n_test entries are the test set.
    for (int i = 0; i < n_test; ++i) {
      std::uniform_int_distribution<int> pick(i, n - 1);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    CvSplit split;
    split.test.assign(perm.begin(), perm.begin() + n_test);
    split.train.assign(perm.begin() + n_test, perm.end());
    std::sort(split.test.begin(), split.test.end());
    std::sort(split.train.begin(), split.train.end());
    plan.splits.push_back(std::move(split));
  }
  return plan;
}

double cv_loglik(const WhitenedProblem& problem, int g, double c, const CvPlan& plan,
                 const EmControl& control, const Labels& init, int* failed_folds) {
  plan.validate(problem.n());
  if (static_cast<int>(init.size()) != problem.n())
    throw InvalidInput("initial labels do not match the number of rows");
  double total = 0.0;
  int failed = 0;
  for (const CvSplit& split : plan.splits) {
    try {
      const FitResult fit = problem.fit_rows(split.train, g, c, restrict(init, split.train), control);
      if (fit.diagnostics.failed) {
        ++failed;
        continue;
      }
      total += problem.log_likelihood_rows(split.test, fit.params);
    } catch (const EstimationError&) {
      ++failed;
    } catch (const NotPositiveDefinite&) {
      ++failed;
    }
  }
  if (failed_folds) *failed_folds = failed;
  return failed > 0 ? kNegInf : total;
}

double cv_loglik(const Dataset& data, int g, const SymMatrix& psi, double c, const CvPlan& plan,
                 const EmControl& control, const Labels& init) {
  return cv_loglik(WhitenedProblem(data, psi), g, c, plan, control, init);
}

CvCurve select_c(const WhitenedProblem& problem, int g, const CvPlan& plan,
                 std::span<const double> c_grid, const EmControl& control, const Labels& init) {
  check_grid(c_grid);
  CvCurve curve;
  curve.c_grid.assign(c_grid.begin(), c_grid.end());
  for (double c : c_grid) {
    int failed = 0;
    curve.cv_values.push_back(cv_loglik(problem, g, c, plan, control, init, &failed));
    curve.failed_folds.push_back(failed);
  }
  for (int i = 0; i < static_cast<int>(curve.cv_values.size()); ++i) {
    const double v = curve.cv_values[static_cast<std::size_t>(i)];
    if (v == kNegInf) continue;
    if (curve.selected_index < 0 || v >= curve.cv_values[static_cast<std::size_t>(curve.selected_index)])
      curve.selected_index = i;
  }
  if (curve.selected_index < 0) throw EstimationError("cross-validation failed at every grid point");
  curve.selected_c = curve.c_grid[static_cast<std::size_t>(curve.selected_index)];
  return curve;
}

CvCurve select_c(const Dataset& data, int g, const SymMatrix& psi, const CvPlan& plan,
                 std::span<const double> c_grid, const EmControl& control,
                 const std::optional<Labels>& init) {
  const WhitenedProblem problem(data, psi);
  if (init) return select_c(problem, g, plan, c_grid, control, *init);
  const auto starts = random_starts(data.n(), g, data.dim() + 1, control.n_starts, control.seed);
  return select_c(problem, g, plan, c_grid, control, preliminary_labels(problem, g, starts, control));
}

Labels preliminary_labels(const WhitenedProblem& problem, int g, std::span<const Labels> starts,
                          const EmControl& control) {
  std::vector<FitResult> fits;
  for (const Labels& s : starts) fits.push_back(problem.fit(g, kPreliminaryScaleBalance, s, control));
  const int best = best_by_loglik(fits);
  if (best < 0) throw EstimationError("every preliminary constrained run failed");
  return fits[static_cast<std::size_t>(best)].labels;
}

Labels canonical_labels(std::span<const int> labels) {
  std::map<int, int> renamed;
  Labels out;
  out.reserve(labels.size());
  for (int l : labels) {
    const int next = static_cast<int>(renamed.size()) + 1;
    out.push_back(renamed.try_emplace(l, next).first->second);
  }
  return out;
}

TunedFit tune_and_fit(const WhitenedProblem& problem, int g, std::span<const Labels> starts,
                      const CvPlan& plan, std::span<const double> c_grid, const EmControl& control) {
  if (starts.empty()) throw InvalidInput("tune_and_fit: no starting partitions");
  check_grid(c_grid);
  plan.validate(problem.n());

  TunedFit out;
  std::vector<Labels> candidates;
  for (const Labels& s : starts) {
    const FitResult pre = problem.fit(g, kPreliminaryScaleBalance, s, control);
    Labels key = canonical_labels(pre.labels);
    auto it = std::find(candidates.begin(), candidates.end(), key);
    if (it == candidates.end()) {
      candidates.push_back(std::move(key));
      out.start_candidate.push_back(static_cast<int>(candidates.size()) - 1);
    } else {
      out.start_candidate.push_back(static_cast<int>(it - candidates.begin()));
    }
  }

  int best = -1;
  for (std::size_t k = 0; k < candidates.size(); ++k) {
    CvCurve curve;
    try {
      curve = select_c(problem, g, plan, c_grid, control, candidates[k]);
    } catch (const EstimationError&) {
      curve.c_grid.assign(c_grid.begin(), c_grid.end());
      curve.cv_values.assign(c_grid.size(), kNegInf);
    }
    out.candidate_curves.push_back(std::move(curve));
    const CvCurve& cur = out.candidate_curves.back();
    if (cur.selected_index < 0) continue;
    const double v = cur.cv_values[static_cast<std::size_t>(cur.selected_index)];
    if (best < 0) {
      best = static_cast<int>(k);
      continue;
    }
    const CvCurve& top = out.candidate_curves[static_cast<std::size_t>(best)];
    if (v > top.cv_values[static_cast<std::size_t>(top.selected_index)]) best = static_cast<int>(k);
  }
  if (best < 0) throw EstimationError("cross-validation failed for every starting partition");

  for (std::size_t k = 0; k < candidates.size(); ++k) {
    const CvCurve& curve = out.candidate_curves[k];
    if (curve.selected_index < 0) {
      out.candidate_logliks.push_back(kNegInf);
      continue;
    }
    FitResult fit = problem.fit(g, curve.selected_c, candidates[k], control);
    out.candidate_logliks.push_back(fit.diagnostics.failed ? kNegInf : fit.final_loglik);
    if (static_cast<int>(k) == best) {
      fit.start_index = static_cast<int>(
          std::find(out.start_candidate.begin(), out.start_candidate.end(), best) -
          out.start_candidate.begin());
      out.fit = std::move(fit);
    }
  }
  out.candidate = best;
  out.curve = out.candidate_curves[static_cast<std::size_t>(best)];
  return out;
}

}  // namespace eqgmm
