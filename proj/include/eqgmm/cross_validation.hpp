#pragma once

#include <cstdint>
#include <optional>
#include <span>
#include <vector>

#include "eqgmm/constrained.hpp"

namespace eqgmm {

struct CvSplit {
  std::vector<int> train;  // 0-based row indices, ascending
  std::vector<int> test;
};

/// K independent random train/test splits of 0..n-1.
struct CvPlan {
  int n = 0;
  int n_splits = 25;
  double test_fraction = 0.1;
  std::uint64_t seed = 0;
  std::vector<CvSplit> splits;

  /// Every index in range, every split has a non-empty training and test set.
  void validate(int rows) const;
};

struct CvCurve {
  std::vector<double> c_grid;     // ascending
  std::vector<double> cv_values;  // -inf where a fold failed
  std::vector<int> failed_folds;  // per grid point
  double selected_c = 0.0;
  int selected_index = -1;
};

struct CvConfig {
  int n_splits = 25;
  double test_fraction = 0.1;
  std::vector<double> c_grid;  // empty means default_c_grid()

  [[nodiscard]] std::vector<double> grid() const;
};

/// {0.01, 0.025, 0.0632, 0.158, 0.398, 0.95}
std::vector<double> default_c_grid();

/// Each test set has round(n · test_fraction) rows drawn uniformly without
/// replacement; the training set is the complement. Splits are independent
/// across k.
CvPlan make_splits(int n, int k, double test_fraction, std::uint64_t seed);

/// CV(c) = Σ_k ℓ(test_k; θ̂(c, train_k)). Each fold is initialized from `init`
/// restricted to its training rows. Returns -inf if any fold fails; the
/// number of failed folds is written to `failed_folds` when given.
double cv_loglik(const WhitenedProblem& problem, int g, double c, const CvPlan& plan,
                 const EmControl& control, const Labels& init, int* failed_folds = nullptr);

double cv_loglik(const Dataset& data, int g, const SymMatrix& psi, double c, const CvPlan& plan,
                 const EmControl& control, const Labels& init);

/// Evaluates CV(c) over the grid with the same plan and initialization, then
/// picks the argmax (ties go to the larger c).
CvCurve select_c(const WhitenedProblem& problem, int g, const CvPlan& plan,
                 std::span<const double> c_grid, const EmControl& control, const Labels& init);

/// Without `init`, labels come from preliminary_labels over control.n_starts
/// random partitions.
CvCurve select_c(const Dataset& data, int g, const SymMatrix& psi, const CvPlan& plan,
                 std::span<const double> c_grid, const EmControl& control,
                 const std::optional<Labels>& init = {});

/// Labels of the best (by likelihood) constrained fit at
/// kPreliminaryScaleBalance over the given starts.
Labels preliminary_labels(const WhitenedProblem& problem, int g, std::span<const Labels> starts,
                          const EmControl& control);

/// Relabels so that classes are numbered by first appearance.
Labels canonical_labels(std::span<const int> labels);

/// Outcome of the full constrained pipeline over a set of random starts.
struct TunedFit {
  FitResult fit;                           // final full-data fit of the selected root
  CvCurve curve;                           // CV curve of the selected root
  int candidate = 0;                       // index into candidate_curves
  std::vector<int> start_candidate;        // start → distinct preliminary solution
  std::vector<CvCurve> candidate_curves;   // one per distinct preliminary solution
  std::vector<double> candidate_logliks;   // final full-data log-likelihood per candidate
};

/// For every start: preliminary constrained run, then c selection by
/// cross-validation from the preliminary labels, then a full-data fit at the
/// selected c. Starts whose preliminary runs coincide (up to relabeling)
/// share one candidate. The root with the highest cross-validated
/// log-likelihood is returned.
TunedFit tune_and_fit(const WhitenedProblem& problem, int g, std::span<const Labels> starts,
                      const CvPlan& plan, std::span<const double> c_grid, const EmControl& control);

}  // namespace eqgmm
