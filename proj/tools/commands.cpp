#include "commands.hpp"

#include <cmath>
#include <filesystem>
#include <iostream>
#include <limits>

#include <json.hpp>

#include "eqgmm/constrained.hpp"
#include "eqgmm/errors.hpp"
#include "eqgmm/metrics.hpp"
#include "eqgmm/rng.hpp"

namespace eqgmm::cli {

namespace {

using nlohmann::ordered_json;
namespace fs = std::filesystem;

ordered_json num(double v) { return std::isfinite(v) ? ordered_json(v) : ordered_json(nullptr); }

ordered_json vec(const Vector& v) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) out.push_back(num(v(i)));
  return out;
}

ordered_json mat(const Matrix& m) {
  ordered_json out = ordered_json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) out.push_back(vec(m.row(i).transpose()));
  return out;
}

ordered_json curve_json(const CvCurve& c) {
  ordered_json values = ordered_json::array();
  for (double v : c.cv_values) values.push_back(num(v));
  return {{"c_grid", c.c_grid},
          {"cv_values", values},
          {"failed_folds", c.failed_folds},
          {"selected_c", c.selected_c},
          {"selected_index", c.selected_index}};
}

ordered_json params_json(const MixtureParams& p) {
  ordered_json means = ordered_json::array(), covs = ordered_json::array();
  for (const Vector& m : p.means) means.push_back(vec(m));
  for (const SymMatrix& s : p.covariances) covs.push_back(mat(s.matrix()));
  return {{"weights", vec(p.weights)}, {"means", means}, {"covariances", covs}};
}

ordered_json config_json(const RunConfig& c, const Dataset* data) {
  ordered_json j{{"input", c.input},           {"has_header", c.has_header},
                 {"G", c.g},                   {"method", c.method},
                 {"dof", c.dof},               {"n_splits", c.n_splits},
                 {"test_fraction", c.test_fraction}, {"c_grid", c.cv().grid()},
                 {"max_iters", c.max_iters},   {"rel_tol", c.rel_tol},
                 {"n_starts", c.n_starts},     {"seed", c.seed}};
  if (c.label_column) j["label_column"] = *c.label_column;
  if (c.c) j["c"] = *c.c;
  if (data) {
    j["n"] = data->n();
    j["J"] = data->dim();
  }
  return j;
}

Method require_method(const std::string& name) {
  const auto m = parse_method(name);
  if (!m) throw InvalidInput("unknown method '" + name + "' (expected homN, hetN, homt, conS, conN or cont)");
  return *m;
}

PsiKind psi_kind(Method m, double dof) {
  switch (m) {
    case Method::ConS: return PsiKind::sample_covariance();
    case Method::ConN: return PsiKind::homoscedastic_normal();
    default: return PsiKind::homoscedastic_t(dof);
  }
}

void check_common(const RunConfig& c) {
  c.control().validate();
  if (c.g < 1) throw InvalidInput("G must be >= 1");
  if (c.c && !c.c_grid.empty()) throw InvalidInput("give either a fixed c or a c grid, not both");
  if (c.c && !(*c.c > 0.0 && *c.c <= 1.0)) throw InvalidInput("c must lie in (0, 1]");
  if (c.n_splits < 1) throw InvalidInput("n-splits must be >= 1");
  if (!(c.test_fraction > 0.0 && c.test_fraction <= 0.5)) throw InvalidInput("test-fraction must lie in (0, 0.5]");
  if (!parse_report_format(c.format)) throw InvalidInput("format must be json or csv");
}

Dataset load_input(const RunConfig& c) {
  if (c.input.empty()) throw InvalidInput("an input CSV is required");
  Dataset d = load_csv(c.input, c.has_header, c.label_column);
  d.validate();
  if (d.n() <= c.g) throw DataError("input has too few rows for " + std::to_string(c.g) + " components");
  return d;
}

std::string scenario_of(const RunConfig& c) {
  return fs::path(c.input).stem().string() + "-G" + std::to_string(c.g) + "-" + c.method;
}

fs::path output_path(const RunConfig& c, const std::string& command, const std::string& scenario,
                     const std::string& ext) {
  if (!c.output.empty()) return c.output;
  return fs::path(c.out_dir) / (command + "-" + scenario + "-" + std::to_string(c.seed) + "." + ext);
}

void announce(const fs::path& p) { std::cout << p.string() << "\n"; }

std::vector<Labels> shared_starts(const RunConfig& c, const Dataset& d) {
  return random_starts(d.n(), c.g, d.dim() + 1, c.n_starts, derive_seed(c.seed, {kStreamStarts, 0}));
}

std::uint64_t split_seed(const RunConfig& c) { return derive_seed(c.seed, {kStreamSplits, 0}); }

// Constrained fit at a fixed c: highest likelihood over the shared starts.
MethodOutcome fixed_c_fit(const RunConfig& c, Method m, const Dataset& d, const std::vector<Labels>& starts) {
  const SymMatrix psi = psi_target(d, c.g, psi_kind(m, c.dof), starts, c.control());
  const WhitenedProblem problem(d, psi);
  std::vector<FitResult> fits;
  std::vector<double> ll;
  for (std::size_t s = 0; s < starts.size(); ++s) {
    fits.push_back(problem.fit(c.g, *c.c, starts[s], c.control()));
    fits.back().start_index = static_cast<int>(s);
    if (!fits.back().diagnostics.failed) ll.push_back(fits.back().final_loglik);
  }
  const int best = best_by_loglik(fits);
  if (best < 0) throw EstimationError("every starting partition failed");
  MethodOutcome out;
  out.fit = std::move(fits[static_cast<std::size_t>(best)]);
  out.psi = psi;
  out.n_local_maxima = count_local_maxima(std::span<const double>(ll));
  return out;
}

std::vector<Method> selected_methods(const RunConfig& c, bool constrained_only) {
  std::vector<Method> out;
  if (c.methods.empty()) {
    for (Method m : all_methods())
      if (!constrained_only || is_constrained(m)) out.push_back(m);
    return out;
  }
  for (const std::string& name : c.methods) out.push_back(require_method(name));
  return out;
}

}  // namespace

EmControl RunConfig::control() const {
  EmControl c;
  c.max_iters = max_iters;
  c.rel_tol = rel_tol;
  c.n_starts = n_starts;
  c.seed = seed;
  return c;
}

CvConfig RunConfig::cv() const {
  CvConfig c;
  c.n_splits = n_splits;
  c.test_fraction = test_fraction;
  c.c_grid = c_grid;
  return c;
}

int cmd_fit(const RunConfig& config) {
  check_common(config);
  const Method method = require_method(config.method);
  if (config.c && !is_constrained(method)) throw InvalidInput("a fixed c only applies to constrained methods");
  const Dataset data = load_input(config);
  const auto starts = shared_starts(config, data);

  MethodOutcome out;
  std::optional<StudentTParams> t_params;
  if (config.c) {
    out = fixed_c_fit(config, method, data, starts);
  } else if (method == Method::HomT && config.dof != 4.0) {
    // run_method uses the default dof; honour an explicit one here.
    std::vector<std::pair<StudentTParams, FitResult>> fits;
    std::vector<FitResult> plain;
    std::vector<double> ll;
    for (const Labels& s : starts) {
      fits.push_back(fit_homoscedastic_t(data, config.g, config.dof, s, config.control()));
      plain.push_back(fits.back().second);
      if (!plain.back().diagnostics.failed) ll.push_back(plain.back().final_loglik);
    }
    const int best = best_by_loglik(plain);
    if (best < 0) throw EstimationError("every starting partition failed");
    out.fit = plain[static_cast<std::size_t>(best)];
    out.fit.start_index = best;
    t_params = fits[static_cast<std::size_t>(best)].first;
    out.n_local_maxima = count_local_maxima(std::span<const double>(ll));
  } else {
    CvConfig cv = config.cv();
    out = run_method(method, data, config.g, starts, cv, config.control(), split_seed(config));
  }
  if (out.fit.diagnostics.failed) throw EstimationError("estimation failed: " + out.fit.diagnostics.message);

  ordered_json doc;
  doc["command"] = "fit";
  doc["config"] = config_json(config, &data);
  doc["method"] = std::string(method_name(method));
  doc["params"] = params_json(out.fit.params);
  if (t_params) doc["t_scale"] = mat(t_params->scale.matrix());
  doc["labels"] = out.fit.labels;
  doc["posteriors"] = mat(out.fit.responsibilities.values);
  ordered_json trace = ordered_json::array();
  for (double v : out.fit.loglik_trace) trace.push_back(num(v));
  doc["loglik_trace"] = trace;
  doc["final_loglik"] = num(out.fit.final_loglik);
  doc["converged"] = out.fit.converged;
  doc["iterations"] = out.fit.iterations;
  doc["start_index"] = out.fit.start_index;
  doc["n_local_maxima"] = out.n_local_maxima;
  if (out.fit.c_used) doc["selected_c"] = *out.fit.c_used;
  if (out.psi) doc["psi"] = mat(out.psi->matrix());
  if (out.curve) doc["cv_curve"] = curve_json(*out.curve);
  doc["diagnostics"] = {{"rescues", out.fit.diagnostics.rescues},
                        {"ridge_applied", out.fit.diagnostics.ridge_applied},
                        {"message", out.fit.diagnostics.message}};
  if (data.has_labels()) doc["arand"] = adjusted_rand(data.true_labels, out.fit.labels);

  const fs::path path = output_path(config, "fit", scenario_of(config), "json");
  write_text(path, doc.dump(2) + "\n");
  announce(path);
  return kOk;
}

int cmd_tune(const RunConfig& config) {
  check_common(config);
  const Method method = require_method(config.method);
  if (!is_constrained(method)) throw InvalidInput("tune needs a constrained method (conS, conN or cont)");
  if (config.c) throw InvalidInput("tune selects c; a fixed c is not allowed");
  const Dataset data = load_input(config);
  const auto starts = shared_starts(config, data);
  const SymMatrix psi = psi_target(data, config.g, psi_kind(method, config.dof), starts, config.control());
  const WhitenedProblem problem(data, psi);
  const CvPlan plan = make_splits(data.n(), config.n_splits, config.test_fraction, split_seed(config));
  const std::vector<double> grid = config.cv().grid();
  const TunedFit tuned = tune_and_fit(problem, config.g, starts, plan, grid, config.control());

  ordered_json doc;
  doc["command"] = "tune";
  doc["config"] = config_json(config, &data);
  doc["method"] = std::string(method_name(method));
  doc["psi"] = mat(psi.matrix());
  doc["curve"] = curve_json(tuned.curve);
  doc["selected_candidate"] = tuned.candidate;
  doc["start_candidate"] = tuned.start_candidate;
  // The preliminary labels each candidate curve was started from.
  ordered_json cands = ordered_json::array();
  for (std::size_t k = 0; k < tuned.candidate_curves.size(); ++k) {
    const auto first = std::find(tuned.start_candidate.begin(), tuned.start_candidate.end(), static_cast<int>(k));
    cands.push_back({{"first_start", first - tuned.start_candidate.begin()},
                     {"curve", curve_json(tuned.candidate_curves[k])},
                     {"final_loglik", num(tuned.candidate_logliks[k])}});
  }
  doc["candidates"] = cands;
  doc["split_seed"] = split_seed(config);
  if (data.has_labels()) doc["arand"] = adjusted_rand(data.true_labels, tuned.fit.labels);

  const fs::path path = output_path(config, "tune", scenario_of(config), "json");
  write_text(path, doc.dump(2) + "\n");
  announce(path);
  return kOk;
}

int cmd_simulate(const RunConfig& config) {
  check_common(config);
  if (config.replications < 1) throw InvalidInput("replications must be >= 1");
  SimScenario base;
  base.n = config.n;
  base.j = config.j;
  base.weights = config.weights;
  base.sep = config.sep;
  base.mean_sd = config.mean_sd;
  base.replications = config.full_scale ? 250 : config.replications;
  base.n_starts = config.n_starts;
  base.seed = config.seed;
  base.validate();
  if (base.undersized() && !config.quiet)
    std::cerr << "warning: n <= G(J+1); some classes cannot support a full-rank covariance\n";

  RunOptions options;
  options.workers = default_workers();
  if (!config.quiet) options.log = [](const std::string& line) { std::cerr << line << "\n"; };

  std::vector<CellResult> cells;
  if (config.cv_sweep) {
    const auto methods = selected_methods(config, true);
    for (double fraction : {0.5, 0.2, 0.1}) {
      for (int k : {base.n / 10, base.n / 5, base.n}) {
        CvConfig cv = config.cv();
        cv.test_fraction = fraction;
        cv.n_splits = std::max(1, k);
        cells.push_back(run_cell(base, methods, cv, config.control(), options));
      }
    }
  } else {
    const auto methods = selected_methods(config, false);
    const std::vector<double> seps = config.sep_sweep.empty() ? std::vector<double>{base.sep} : config.sep_sweep;
    for (double sep : seps) {
      SimScenario sc = base;
      sc.sep = sep;
      cells.push_back(run_cell(sc, methods, config.cv(), config.control(), options));
    }
  }

  ReportOptions ro;
  ro.command = "simulate";
  ro.include_timing = config.timing;
  const ReportFormat format = *parse_report_format(config.format);
  std::string scenario = base.id();
  if (config.cv_sweep) scenario += "-cvsweep";
  if (!config.sep_sweep.empty()) scenario += "-sepsweep";
  const fs::path path = output_path(config, "simulate", scenario, format == ReportFormat::Json ? "json" : "csv");
  emit_report(cells, path, format, ro);
  announce(path);

  for (const CellResult& cell : cells) {
    std::cout << cell.scenario.id() << "  K=" << cell.cv.n_splits << " test=" << cell.cv.test_fraction << "\n";
    for (const MethodAggregate& a : cell.aggregates) {
      std::cout << "  " << method_name(a.method) << "  ARand " << a.mean_arand << "  MAD/n "
                << a.mean_mad_per_observation;
      if (a.mean_c) std::cout << "  c " << *a.mean_c;
      if (config.local_maxima)
        std::cout << "  maxima mean " << a.mean_local_maxima << " median " << a.median_local_maxima;
      if (a.n_failed) std::cout << "  failed " << a.n_failed;
      std::cout << "\n";
    }
  }
  return kOk;
}

int cmd_evaluate(const RunConfig& config) {
  if (config.truth.empty() || config.estimate.empty()) throw InvalidInput("evaluate needs --truth and --estimate");
  const Matrix a = load_matrix_csv(config.truth, config.has_header);
  const Matrix b = load_matrix_csv(config.estimate, config.has_header);
  if (a.rows() != b.rows()) throw DataError("truth and estimate have different numbers of rows");

  // One column means hard labels; several columns mean posterior matrices.
  auto labels_of = [](const Matrix& m) {
    if (m.cols() == 1) {
      Labels l;
      for (Eigen::Index i = 0; i < m.rows(); ++i) {
        if (m(i, 0) != std::floor(m(i, 0))) throw DataError("label file holds a non-integer value");
        l.push_back(static_cast<int>(m(i, 0)));
      }
      return l;
    }
    return hard_assign(ResponsibilityMatrix{m});
  };
  ordered_json doc;
  doc["n"] = a.rows();
  doc["arand"] = adjusted_rand(labels_of(a), labels_of(b));
  if (a.cols() > 1 || b.cols() > 1) {
    if (a.cols() != b.cols()) throw DataError("posterior matrices have different numbers of columns");
    const double m = mad(ResponsibilityMatrix{a}, ResponsibilityMatrix{b});
    doc["mad"] = m;
    doc["mad_per_observation"] = m / static_cast<double>(a.rows());
  }
  const std::string text = doc.dump(2) + "\n";
  if (config.output.empty()) {
    std::cout << text;
  } else {
    write_text(config.output, text);
  }
  return kOk;
}

int guarded(int (*command)(const RunConfig&), const RunConfig& config) {
  try {
    return command(config);
  } catch (const DataError& e) {
    std::cerr << "data error: " << e.what() << "\n";
    return kDataError;
  } catch (const InvalidInput& e) {
    std::cerr << "configuration error: " << e.what() << "\n";
    return kConfigError;
  } catch (const EstimationError& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return kEstimationError;
  } catch (const NotPositiveDefinite& e) {
    std::cerr << "estimation failed: " << e.what() << "\n";
    return kEstimationError;
  }
}

}  // namespace eqgmm::cli
