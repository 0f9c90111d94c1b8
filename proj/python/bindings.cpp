#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "eqgmm/constrained.hpp"
#include "eqgmm/cross_validation.hpp"
#include "eqgmm/errors.hpp"
#include "eqgmm/io.hpp"
#include "eqgmm/metrics.hpp"
#include "eqgmm/simulation.hpp"

namespace py = pybind11;
using namespace eqgmm;

namespace {

EmControl control(int max_iters, double rel_tol, int n_starts, std::uint64_t seed) {
  EmControl c;
  c.max_iters = max_iters;
  c.rel_tol = rel_tol;
  c.n_starts = n_starts;
  c.seed = seed;
  c.validate();
  return c;
}

Matrix stack_means(const MixtureParams& p) {
  Matrix m(p.n_components(), p.dim());
  for (int k = 0; k < p.n_components(); ++k) m.row(k) = p.means[k].transpose();
  return m;
}

py::dict to_dict(const FitResult& f) {
  py::dict d;
  d["weights"] = f.params.weights;
  d["means"] = stack_means(f.params);
  py::list covs;
  for (const SymMatrix& s : f.params.covariances) covs.append(s.matrix());
  d["covariances"] = covs;
  d["labels"] = f.labels;
  d["responsibilities"] = f.responsibilities.values;
  d["loglik_trace"] = f.loglik_trace;
  d["final_loglik"] = f.final_loglik;
  d["converged"] = f.converged;
  d["iterations"] = f.iterations;
  d["start_index"] = f.start_index;
  d["c"] = f.c_used ? py::cast(*f.c_used) : py::none();
  d["rescues"] = f.diagnostics.rescues;
  d["failed"] = f.diagnostics.failed;
  return d;
}

py::dict to_dict(const CvCurve& c) {
  py::dict d;
  d["c_grid"] = c.c_grid;
  d["cv_values"] = c.cv_values;
  d["failed_folds"] = c.failed_folds;
  d["selected_c"] = c.selected_c;
  d["selected_index"] = c.selected_index;
  return d;
}

PsiKind psi_kind(const std::string& name, double dof) {
  if (name == "sample") return PsiKind::sample_covariance();
  if (name == "normal") return PsiKind::homoscedastic_normal();
  if (name == "t") return PsiKind::homoscedastic_t(dof);
  throw InvalidInput("psi kind must be 'sample', 'normal' or 't'");
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Affine equivariant constrained Gaussian mixtures";

  py::register_exception<InvalidInput>(m, "InvalidInput", PyExc_ValueError);
  py::register_exception<DataError>(m, "DataError", PyExc_IOError);
  py::register_exception<EstimationError>(m, "EstimationError", PyExc_RuntimeError);
  py::register_exception<NotPositiveDefinite>(m, "NotPositiveDefinite", PyExc_ValueError);

  m.def(
      "load_csv",
      [](const std::string& path, bool header, std::optional<int> label_column) {
        const Dataset d = load_csv(path, header, label_column);
        return py::make_tuple(d.rows, d.true_labels);
      },
      py::arg("path"), py::arg("header") = false, py::arg("label_column") = py::none());

  m.def("whitening", [](const Matrix& psi) { return whitening(SymMatrix(psi)); }, py::arg("psi"));
  m.def(
      "generalized_eigvals", [](const Matrix& a, const Matrix& b) { return generalized_eigvals(SymMatrix(a), SymMatrix(b)); },
      py::arg("a"), py::arg("b"));

  m.def(
      "posteriors",
      [](const Matrix& x, const Vector& weights, const Matrix& means, const std::vector<Matrix>& covs) {
        MixtureParams p;
        p.weights = weights;
        for (Eigen::Index k = 0; k < means.rows(); ++k) p.means.push_back(means.row(k).transpose());
        for (const Matrix& s : covs) p.covariances.emplace_back(s);
        return posteriors(Dataset(x), p).values;
      },
      py::arg("x"), py::arg("weights"), py::arg("means"), py::arg("covariances"));

  m.def(
      "fit_homoscedastic_normal",
      [](const Matrix& x, int g, std::optional<Labels> init, int max_iters, double rel_tol, int n_starts,
         std::uint64_t seed) {
        const auto c = control(max_iters, rel_tol, n_starts, seed);
        const Dataset d(x);
        return to_dict(init ? fit_homoscedastic_normal(d, g, *init, c) : fit_homoscedastic_normal(d, g, c));
      },
      py::arg("x"), py::arg("g"), py::arg("init") = py::none(), py::arg("max_iters") = 500,
      py::arg("rel_tol") = 1e-8, py::arg("n_starts") = 10, py::arg("seed") = 0);

  m.def(
      "fit_heteroscedastic_bounded",
      [](const Matrix& x, int g, double lower, double upper, std::optional<Labels> init, int max_iters,
         double rel_tol, int n_starts, std::uint64_t seed) {
        const auto c = control(max_iters, rel_tol, n_starts, seed);
        const Dataset d(x);
        return to_dict(init ? fit_heteroscedastic_bounded(d, g, lower, upper, *init, c)
                            : fit_heteroscedastic_bounded(d, g, lower, upper, c));
      },
      py::arg("x"), py::arg("g"), py::arg("lower") = kHetLowerBound, py::arg("upper") = kHetUpperBound,
      py::arg("init") = py::none(), py::arg("max_iters") = 500, py::arg("rel_tol") = 1e-8,
      py::arg("n_starts") = 10, py::arg("seed") = 0);

  m.def(
      "fit_homoscedastic_t",
      [](const Matrix& x, int g, double dof, std::optional<Labels> init, int max_iters, double rel_tol,
         int n_starts, std::uint64_t seed) {
        const auto c = control(max_iters, rel_tol, n_starts, seed);
        const Dataset d(x);
        auto [tp, fit] = init ? fit_homoscedastic_t(d, g, dof, *init, c) : fit_homoscedastic_t(d, g, dof, c);
        py::dict out = to_dict(fit);
        out["scale"] = tp.scale.matrix();
        out["dof"] = tp.dof;
        return out;
      },
      py::arg("x"), py::arg("g"), py::arg("dof") = 4.0, py::arg("init") = py::none(), py::arg("max_iters") = 500,
      py::arg("rel_tol") = 1e-8, py::arg("n_starts") = 10, py::arg("seed") = 0);

  m.def(
      "psi_target",
      [](const Matrix& x, int g, const std::string& kind, double dof, int n_starts, std::uint64_t seed) {
        return psi_target(Dataset(x), g, psi_kind(kind, dof), control(500, 1e-8, n_starts, seed)).matrix();
      },
      py::arg("x"), py::arg("g"), py::arg("kind") = "t", py::arg("dof") = 4.0, py::arg("n_starts") = 10,
      py::arg("seed") = 0);

  m.def(
      "fit_constrained",
      [](const Matrix& x, int g, const Matrix& psi, double c, std::optional<Labels> init, int max_iters,
         double rel_tol, int n_starts, std::uint64_t seed) {
        return to_dict(fit_constrained(Dataset(x), g, SymMatrix(psi), c, control(max_iters, rel_tol, n_starts, seed),
                                       init));
      },
      py::arg("x"), py::arg("g"), py::arg("psi"), py::arg("c"), py::arg("init") = py::none(),
      py::arg("max_iters") = 500, py::arg("rel_tol") = 1e-8, py::arg("n_starts") = 10, py::arg("seed") = 0);

  m.def(
      "select_c",
      [](const Matrix& x, int g, const Matrix& psi, std::vector<double> c_grid, int n_splits, double test_fraction,
         std::uint64_t seed, std::optional<Labels> init, int n_starts) {
        const Dataset d(x);
        if (c_grid.empty()) c_grid = default_c_grid();
        const CvPlan plan = make_splits(d.n(), n_splits, test_fraction, seed);
        return to_dict(select_c(d, g, SymMatrix(psi), plan, c_grid, control(500, 1e-8, n_starts, seed), init));
      },
      py::arg("x"), py::arg("g"), py::arg("psi"), py::arg("c_grid") = std::vector<double>{},
      py::arg("n_splits") = 25, py::arg("test_fraction") = 0.1, py::arg("seed") = 0, py::arg("init") = py::none(),
      py::arg("n_starts") = 10);

  m.def(
      "check_generalized",
      [](const std::vector<Matrix>& covs, const Matrix& psi, double c) {
        MixtureParams p;
        p.weights = Vector::Constant(static_cast<Eigen::Index>(covs.size()), 1.0 / static_cast<double>(covs.size()));
        for (const Matrix& s : covs) {
          p.means.push_back(Vector::Zero(s.rows()));
          p.covariances.emplace_back(s);
        }
        return check_generalized(p, SymMatrix(psi), c);
      },
      py::arg("covariances"), py::arg("psi"), py::arg("c"));
  m.def("stein_loss", [](const Matrix& s, const Matrix& psi) { return stein_loss(SymMatrix(s), SymMatrix(psi)); },
        py::arg("sigma"), py::arg("psi"));
  m.def("stein_bound", &stein_bound, py::arg("c"), py::arg("j"));

  m.def("adjusted_rand", [](const Labels& a, const Labels& b) { return adjusted_rand(a, b); }, py::arg("a"),
        py::arg("b"));
  m.def("mad", [](const Matrix& a, const Matrix& b) { return mad({a}, {b}); }, py::arg("truth"), py::arg("estimate"));

  m.def(
      "generate_dataset",
      [](int n, int j, std::vector<double> weights, double sep, std::uint64_t seed, int replication) {
        SimScenario sc;
        sc.n = n;
        sc.j = j;
        sc.weights = std::move(weights);
        sc.sep = sep;
        sc.seed = seed;
        const GeneratedSample s = generate_dataset(sc, replication);
        py::dict d;
        d["x"] = s.data.rows;
        d["labels"] = s.data.true_labels;
        d["posteriors"] = s.true_posteriors.values;
        return d;
      },
      py::arg("n") = 50, py::arg("j") = 8, py::arg("weights") = std::vector<double>{0.2, 0.3, 0.5},
      py::arg("sep") = 2.0, py::arg("seed") = 1, py::arg("replication") = 0);

  m.def(
      "run_cell",
      [](int n, int j, std::vector<double> weights, double sep, int replications, int n_starts, std::uint64_t seed,
         std::vector<std::string> methods, int n_splits, double test_fraction) {
        SimScenario sc;
        sc.n = n;
        sc.j = j;
        sc.weights = std::move(weights);
        sc.sep = sep;
        sc.replications = replications;
        sc.n_starts = n_starts;
        sc.seed = seed;
        std::vector<Method> ms;
        for (const std::string& name : methods) {
          const auto m = parse_method(name);
          if (!m) throw InvalidInput("unknown method '" + name + "'");
          ms.push_back(*m);
        }
        if (ms.empty()) ms = all_methods();
        CvConfig cv;
        cv.n_splits = n_splits;
        cv.test_fraction = test_fraction;
        CellResult cell;
        {
          py::gil_scoped_release release;
          cell = run_cell(sc, ms, cv, EmControl{});
        }
        py::list out;
        for (const MethodAggregate& a : cell.aggregates) {
          py::dict d;
          d["method"] = std::string(method_name(a.method));
          d["n_ok"] = a.n_ok;
          d["n_failed"] = a.n_failed;
          d["mean_arand"] = a.mean_arand;
          d["mean_mad"] = a.mean_mad;
          d["mean_mad_per_observation"] = a.mean_mad_per_observation;
          d["mean_c"] = a.mean_c ? py::cast(*a.mean_c) : py::none();
          d["mean_local_maxima"] = a.mean_local_maxima;
          out.append(d);
        }
        return out;
      },
      py::arg("n") = 50, py::arg("j") = 8, py::arg("weights") = std::vector<double>{0.2, 0.3, 0.5},
      py::arg("sep") = 2.0, py::arg("replications") = 5, py::arg("n_starts") = 10, py::arg("seed") = 1,
      py::arg("methods") = std::vector<std::string>{}, py::arg("n_splits") = 25, py::arg("test_fraction") = 0.1);
}
