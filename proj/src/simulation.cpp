#include "eqgmm/simulation.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>

#include "eqgmm/errors.hpp"
#include "eqgmm/rng.hpp"

namespace eqgmm {

namespace {

constexpr Method kMethods[] = {Method::HomN, Method::HetN, Method::HomT,
                               Method::ConS, Method::ConN, Method::ConT};

std::string format_number(double v) {
  std::ostringstream os;
  os << v;
  return os.str();
}

int count_valid_maxima(const std::vector<double>& logliks) {
  std::vector<double> ok;
  for (double v : logliks)
    if (std::isfinite(v)) ok.push_back(v);
  return ok.empty() ? 0 : count_local_maxima(std::span<const double>(ok));
}

template <class FitOne>
MethodOutcome best_root(std::span<const Labels> starts, FitOne&& fit_one) {
  std::vector<FitResult> fits;
  std::vector<double> logliks;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    fits.push_back(fit_one(starts[s]));
    fits.back().start_index = static_cast<int>(s);
    logliks.push_back(fits.back().diagnostics.failed ? -std::numeric_limits<double>::infinity()
                                                     : fits.back().final_loglik);
  }
  const int best = best_by_loglik(fits);
  if (best < 0) throw EstimationError("every starting partition failed");
  MethodOutcome out;
  out.fit = std::move(fits[static_cast<std::size_t>(best)]);
  out.n_local_maxima = count_valid_maxima(logliks);
  return out;
}

PsiKind psi_kind_for(Method m) {
  switch (m) {
    case Method::ConS: return PsiKind::sample_covariance();
    case Method::ConN: return PsiKind::homoscedastic_normal();
    default: return PsiKind::homoscedastic_t(4.0);
  }
}

double median(std::vector<int> v) {
  if (v.empty()) return 0.0;
  std::sort(v.begin(), v.end());
  const std::size_t m = v.size() / 2;
  return v.size() % 2 ? v[m] : 0.5 * (v[m - 1] + v[m]);
}

}  // namespace

std::string_view method_name(Method m) {
  switch (m) {
    case Method::HomN: return "homN";
    case Method::HetN: return "hetN";
    case Method::HomT: return "homt";
    case Method::ConS: return "conS";
    case Method::ConN: return "conN";
    case Method::ConT: return "cont";
  }
  return "?";
}

std::optional<Method> parse_method(std::string_view name) {
  for (Method m : kMethods)
    if (method_name(m) == name) return m;
  return std::nullopt;
}

std::vector<Method> all_methods() { return {std::begin(kMethods), std::end(kMethods)}; }

bool is_constrained(Method m) {
  return m == Method::ConS || m == Method::ConN || m == Method::ConT;
}

void SimScenario::validate() const {
  if (n < 10) throw InvalidInput("scenario: n must be >= 10");
  if (j < 1) throw InvalidInput("scenario: J must be >= 1");
  if (weights.empty()) throw InvalidInput("scenario: weights are empty");
  double total = 0.0;
  for (double w : weights) {
    if (!(w > 0.0)) throw InvalidInput("scenario: weights must be positive");
    total += w;
  }
  if (std::abs(total - 1.0) > 1e-9) throw InvalidInput("scenario: weights must sum to 1");
  if (!(sep > 0.0)) throw InvalidInput("scenario: sep must be positive");
  if (!(mean_sd > 0.0)) throw InvalidInput("scenario: mean_sd must be positive");
  if (replications < 1) throw InvalidInput("scenario: replications must be >= 1");
  if (n_starts < 1) throw InvalidInput("scenario: n_starts must be >= 1");
  if (n <= g()) throw InvalidInput("scenario: n must exceed the number of components");
}

std::string SimScenario::id() const {
  std::string s = "J" + std::to_string(j) + "-G" + std::to_string(g()) + "-n" + std::to_string(n) + "-p";
  for (std::size_t k = 0; k < weights.size(); ++k) s += (k ? "_" : "") + format_number(weights[k]);
  return s + "-sep" + format_number(sep);
}

GeneratedSample generate_dataset(const SimScenario& scenario, int replication) {
  scenario.validate();
  if (replication < 0) throw InvalidInput("replication index must be non-negative");
  Rng rng(derive_seed(scenario.seed, {kStreamData, std::uint64_t(replication)}));
  const int g = scenario.g();
  const int j = scenario.j;

  GeneratedSample out;
  MixtureParams& p = out.true_params;
  p.weights = Eigen::Map<const Vector>(scenario.weights.data(), g);
  std::normal_distribution<double> mean_draw(0.0, scenario.mean_sd);
  for (int k = 0; k < g; ++k) {
    Vector mu(j);
    for (int d = 0; d < j; ++d) mu(d) = mean_draw(rng);
    p.means.push_back(std::move(mu));
  }
  std::vector<Matrix> roots;  // Q Λ^{1/2}
  for (int k = 1; k <= g; ++k) {
    std::uniform_real_distribution<double> eig_draw(0.0, k / scenario.sep);
    Vector l(j);
    for (int d = 0; d < j; ++d) {
      do {
        l(d) = eig_draw(rng);
      } while (l(d) < kEigenvalueFloor);
    }
    const Matrix q = random_orthonormal(j, rng);
    p.covariances.emplace_back(q * l.asDiagonal() * q.transpose());
    roots.push_back(q * l.cwiseSqrt().asDiagonal());
  }

  std::discrete_distribution<int> class_draw(scenario.weights.begin(), scenario.weights.end());
  std::normal_distribution<double> std_normal(0.0, 1.0);
  Matrix x(scenario.n, j);
  Labels labels(static_cast<std::size_t>(scenario.n));
  for (int i = 0; i < scenario.n; ++i) labels[static_cast<std::size_t>(i)] = class_draw(rng) + 1;
  for (int i = 0; i < scenario.n; ++i) {
    const int k = labels[static_cast<std::size_t>(i)] - 1;
    Vector z(j);
    for (int d = 0; d < j; ++d) z(d) = std_normal(rng);
    x.row(i) = (p.means[static_cast<std::size_t>(k)] + roots[static_cast<std::size_t>(k)] * z).transpose();
  }
  out.data = Dataset(std::move(x), std::move(labels));
  out.true_posteriors = posteriors(out.data, p);
  return out;
}

MethodOutcome run_method(Method method, const Dataset& data, int g, std::span<const Labels> starts,
                         const CvConfig& cv, const EmControl& control, std::uint64_t split_seed) {
  if (starts.empty()) throw InvalidInput("run_method: no starting partitions");
  switch (method) {
    case Method::HomN:
      return best_root(starts, [&](const Labels& s) { return fit_homoscedastic_normal(data, g, s, control); });
    case Method::HetN:
      return best_root(starts, [&](const Labels& s) {
        return fit_heteroscedastic_bounded(data, g, kHetLowerBound, kHetUpperBound, s, control);
      });
    case Method::HomT:
      return best_root(starts, [&](const Labels& s) { return fit_homoscedastic_t(data, g, 4.0, s, control).second; });
    case Method::ConS:
    case Method::ConN:
    case Method::ConT: {
      const SymMatrix psi = psi_target(data, g, psi_kind_for(method), starts, control);
      const WhitenedProblem problem(data, psi);
      const CvPlan plan = make_splits(data.n(), cv.n_splits, cv.test_fraction, split_seed);
      const std::vector<double> grid = cv.grid();
      TunedFit tuned = tune_and_fit(problem, g, starts, plan, grid, control);
      MethodOutcome out;
      out.n_local_maxima = count_valid_maxima(tuned.candidate_logliks);
      out.fit = std::move(tuned.fit);
      out.curve = std::move(tuned.curve);
      out.psi = psi;
      return out;
    }
  }
  throw InvalidInput("run_method: unknown method");
}

std::vector<MethodAggregate> aggregate(std::span<const ReplicationRecord> records,
                                       std::span<const Method> methods) {
  std::vector<MethodAggregate> out;
  for (Method m : methods) {
    MethodAggregate a;
    a.method = m;
    double c_sum = 0.0;
    int c_count = 0;
    std::vector<int> maxima;
    for (const ReplicationRecord& r : records) {
      if (r.method != m) continue;
      if (r.failed) {
        ++a.n_failed;
        continue;
      }
      ++a.n_ok;
      a.mean_mad += r.metrics.mad;
      a.mean_mad_per_observation += r.metrics.mad_per_observation;
      a.mean_arand += r.metrics.arand;
      a.mean_seconds += r.metrics.elapsed_seconds;
      if (r.metrics.selected_c) {
        c_sum += *r.metrics.selected_c;
        ++c_count;
      }
      if (r.metrics.n_local_maxima) maxima.push_back(*r.metrics.n_local_maxima);
    }
    if (a.n_ok > 0) {
      const double k = a.n_ok;
      a.mean_mad /= k;
      a.mean_mad_per_observation /= k;
      a.mean_arand /= k;
      a.mean_seconds /= k;
    }
    if (c_count > 0) a.mean_c = c_sum / c_count;
    if (!maxima.empty()) {
      double s = 0.0;
      for (int v : maxima) s += v;
      a.mean_local_maxima = s / static_cast<double>(maxima.size());
      a.median_local_maxima = median(maxima);
    }
    out.push_back(a);
  }
  return out;
}

int default_workers() {
  if (const char* env = std::getenv("EQGMM_WORKERS")) {
    const int v = std::atoi(env);
    if (v >= 1) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw == 0 ? 1 : static_cast<int>(hw);
}

CellResult run_cell(const SimScenario& scenario, std::span<const Method> methods, const CvConfig& cv,
                    const EmControl& control, const RunOptions& options) {
  scenario.validate();
  control.validate();
  if (methods.empty()) throw InvalidInput("run_cell: no methods selected");

  CellResult cell;
  cell.scenario = scenario;
  cell.cv = cv;
  cell.control = control;
  cell.methods.assign(methods.begin(), methods.end());

  const int reps = scenario.replications;
  const std::size_t n_methods = methods.size();
  std::vector<ReplicationRecord> records(static_cast<std::size_t>(reps) * n_methods);
  std::atomic<int> next{0};
  std::mutex log_mutex;

  auto work = [&] {
    for (int r = next++; r < reps; r = next++) {
      const GeneratedSample sample = generate_dataset(scenario, r);
      const int g = scenario.g();
      const auto starts =
          random_starts(scenario.n, g, scenario.j + 1, scenario.n_starts,
                        derive_seed(scenario.seed, {kStreamStarts, std::uint64_t(r)}));
      const std::uint64_t split_seed = derive_seed(scenario.seed, {kStreamSplits, std::uint64_t(r)});
      for (std::size_t mi = 0; mi < n_methods; ++mi) {
        ReplicationRecord& rec = records[static_cast<std::size_t>(r) * n_methods + mi];
        rec.method = methods[mi];
        rec.replication = r;
        const auto t0 = std::chrono::steady_clock::now();
        try {
          const MethodOutcome o = run_method(methods[mi], sample.data, g, starts, cv, control, split_seed);
          rec.metrics.elapsed_seconds =
              std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
          rec.metrics.mad = mad(sample.true_posteriors, o.fit.responsibilities);
          rec.metrics.mad_per_observation = rec.metrics.mad / scenario.n;
          rec.metrics.arand = adjusted_rand(sample.data.true_labels, o.fit.labels);
          rec.metrics.n_local_maxima = o.n_local_maxima;
          if (o.curve) rec.metrics.selected_c = o.curve->selected_c;
        } catch (const std::exception& e) {
          rec.failed = true;
          rec.error = e.what();
        }
      }
      if (options.log) {
        std::lock_guard lock(log_mutex);
        options.log(scenario.id() + " replication " + std::to_string(r + 1) + "/" + std::to_string(reps));
      }
    }
  };

  const int workers = std::max(1, std::min(options.workers, reps));
  if (workers == 1) {
    work();
  } else {
    std::vector<std::jthread> pool;
    for (int w = 0; w < workers; ++w) pool.emplace_back(work);
  }

  cell.records = std::move(records);
  cell.aggregates = aggregate(cell.records, cell.methods);
  return cell;
}

LocalMaximaSummary summarize_local_maxima(const CellResult& cell, Method method) {
  LocalMaximaSummary s;
  s.method = method;
  for (const ReplicationRecord& r : cell.records)
    if (r.method == method && !r.failed && r.metrics.n_local_maxima) s.counts.push_back(*r.metrics.n_local_maxima);
  if (!s.counts.empty()) {
    double total = 0.0;
    for (int v : s.counts) total += v;
    s.mean = total / static_cast<double>(s.counts.size());
    s.median = median(s.counts);
  }
  return s;
}

std::vector<LocalMaximaSummary> run_local_maxima_study(const SimScenario& scenario,
                                                       std::span<const Method> methods,
                                                       const CvConfig& cv, const EmControl& control,
                                                       const RunOptions& options) {
  const CellResult cell = run_cell(scenario, methods, cv, control, options);
  std::vector<LocalMaximaSummary> out;
  for (Method m : methods) out.push_back(summarize_local_maxima(cell, m));
  return out;
}

}  // namespace eqgmm
