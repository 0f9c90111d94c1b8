#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "eqgmm/cross_validation.hpp"
#include "eqgmm/metrics.hpp"

namespace eqgmm {

/// The six estimators compared by the harness.
enum class Method { HomN, HetN, HomT, ConS, ConN, ConT };

std::string_view method_name(Method m);
std::optional<Method> parse_method(std::string_view name);
std::vector<Method> all_methods();
bool is_constrained(Method m);

/// Generator configuration: G-class heteroscedastic J-variate normal mixtures
/// with means ~ N(0, mean_sd²) and covariance eigenvalues ~ U(0, g/sep) for
/// component g = 1..G.
struct SimScenario {
  int n = 50;
  int j = 8;
  std::vector<double> weights{0.2, 0.3, 0.5};
  double sep = 2.0;
  double mean_sd = 1.5;
  int replications = 50;
  int n_starts = 10;
  std::uint64_t seed = 1;

  [[nodiscard]] int g() const { return static_cast<int>(weights.size()); }
  /// Throws InvalidInput on bad settings.
  void validate() const;
  /// True when n ≤ G·(J+1), i.e. some class cannot support a full-rank scatter.
  [[nodiscard]] bool undersized() const { return n <= g() * (j + 1); }
  /// Stable identifier, e.g. "J8-G3-n50-p0.2_0.3_0.5-sep2".
  [[nodiscard]] std::string id() const;
};

struct GeneratedSample {
  Dataset data;
  MixtureParams true_params;
  ResponsibilityMatrix true_posteriors;
};

inline constexpr double kEigenvalueFloor = 1e-6;

/// Deterministic in (scenario.seed, replication).
GeneratedSample generate_dataset(const SimScenario& scenario, int replication);

/// One estimator run on one dataset from shared starting partitions.
struct MethodOutcome {
  FitResult fit;
  std::optional<CvCurve> curve;  // constrained methods
  std::optional<SymMatrix> psi;  // constrained methods
  int n_local_maxima = 0;        // distinct final log-likelihoods over the starts
};

/// Unconstrained methods keep the highest-likelihood root. Constrained
/// methods build Ψ from the same starts, then run tune_and_fit with a plan of
/// cv.n_splits splits drawn from split_seed.
MethodOutcome run_method(Method method, const Dataset& data, int g, std::span<const Labels> starts,
                         const CvConfig& cv, const EmControl& control, std::uint64_t split_seed);

struct ReplicationRecord {
  Method method = Method::HomN;
  int replication = 0;
  MetricReport metrics;
  bool failed = false;
  std::string error;
};

struct MethodAggregate {
  Method method = Method::HomN;
  int n_ok = 0;
  int n_failed = 0;
  double mean_mad = 0.0;
  double mean_mad_per_observation = 0.0;
  double mean_arand = 0.0;
  double mean_seconds = 0.0;
  std::optional<double> mean_c;
  double mean_local_maxima = 0.0;
  double median_local_maxima = 0.0;
};

struct CellResult {
  SimScenario scenario;
  CvConfig cv;
  EmControl control;
  std::vector<Method> methods;
  std::vector<ReplicationRecord> records;  // ordered by (replication, method)
  std::vector<MethodAggregate> aggregates;  // in `methods` order
};

struct RunOptions {
  int workers = 1;
  std::function<void(const std::string&)> log;  // one line per finished replication
};

/// Replications are generated, fitted by every method from one shared set of
/// scenario.n_starts random partitions, and scored against the generating
/// posteriors (MAD) and labels (ARand).
CellResult run_cell(const SimScenario& scenario, std::span<const Method> methods, const CvConfig& cv,
                    const EmControl& control, const RunOptions& options = {});

/// Aggregates over the records of a cell (failed records excluded).
std::vector<MethodAggregate> aggregate(std::span<const ReplicationRecord> records,
                                       std::span<const Method> methods);

struct LocalMaximaSummary {
  Method method = Method::HomN;
  double mean = 0.0;
  double median = 0.0;
  std::vector<int> counts;  // per replication
};

LocalMaximaSummary summarize_local_maxima(const CellResult& cell, Method method);

std::vector<LocalMaximaSummary> run_local_maxima_study(const SimScenario& scenario,
                                                       std::span<const Method> methods,
                                                       const CvConfig& cv, const EmControl& control,
                                                       const RunOptions& options = {});

/// Worker count from EQGMM_WORKERS, else the hardware concurrency (≥ 1).
int default_workers();

}  // namespace eqgmm
