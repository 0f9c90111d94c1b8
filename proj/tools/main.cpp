#include <iostream>

#include <CLI11.hpp>

#include "commands.hpp"

using eqgmm::cli::RunConfig;

namespace {

void add_data_options(CLI::App& app, RunConfig& c) {
  app.add_option("-i,--input", c.input, "CSV file, one observation per row");
  app.add_flag("--header", c.has_header, "First line of the CSV is a header");
  app.add_option("--label-column", c.label_column, "0-based column holding true class labels");
  app.add_option("-G,--components", c.g, "Number of mixture components");
}

void add_estimator_options(CLI::App& app, RunConfig& c) {
  app.add_option("-m,--method", c.method, "homN, hetN, homt, conS, conN or cont");
  app.add_option("--dof", c.dof, "Student-t degrees of freedom (> 2)");
  app.add_option("-c,--scale-balance", c.c, "Fixed scale balance c in (0, 1]");
  app.add_option("--c-grid", c.c_grid, "Ascending c values for cross-validation")->delimiter(',');
  app.add_option("-K,--n-splits", c.n_splits, "Number of random train/test splits");
  app.add_option("--test-fraction", c.test_fraction, "Test-set share of each split, in (0, 0.5]");
  app.add_option("--max-iters", c.max_iters, "EM iteration cap");
  app.add_option("--rel-tol", c.rel_tol, "Relative log-likelihood change that stops EM");
  app.add_option("--starts", c.n_starts, "Random initial partitions shared by all methods");
  app.add_option("-s,--seed", c.seed, "Master seed");
}

void add_output_options(CLI::App& app, RunConfig& c) {
  app.add_option("-o,--output", c.output, "Output file (default <command>-<scenario>-<seed>.<ext>)");
  app.add_option("--out-dir", c.out_dir, "Directory for default-named outputs");
  app.add_option("--format", c.format, "json or csv")->check(CLI::IsMember({"json", "csv"}));
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Constrained Gaussian mixture estimation with cross-validated scale balance"};
  app.set_config("--config", "", "TOML/INI file with option values; command-line flags take precedence");
  app.require_subcommand(1);
  RunConfig config;

  auto* fit = app.add_subcommand("fit", "Fit one estimator to a CSV file");
  add_data_options(*fit, config);
  add_estimator_options(*fit, config);
  add_output_options(*fit, config);

  auto* tune = app.add_subcommand("tune", "Cross-validation curve over c for a constrained method");
  add_data_options(*tune, config);
  add_estimator_options(*tune, config);
  add_output_options(*tune, config);

  auto* sim = app.add_subcommand("simulate", "Monte Carlo comparison of the estimators");
  add_estimator_options(*sim, config);
  add_output_options(*sim, config);
  sim->add_option("-n,--n", config.n, "Sample size");
  sim->add_option("-J,--dim", config.j, "Dimension");
  sim->add_option("-p,--weights", config.weights, "Mixing proportions (define G)")->delimiter(',');
  sim->add_option("--sep", config.sep, "Separation divisor of the eigenvalue range");
  sim->add_option("--mean-sd", config.mean_sd, "Standard deviation of the component means");
  sim->add_option("-r,--replications", config.replications, "Replications per cell");
  sim->add_flag("--full-scale", config.full_scale, "Use 250 replications");
  sim->add_option("--methods", config.methods, "Subset of methods")->delimiter(',');
  sim->add_option("--sep-sweep", config.sep_sweep, "One cell per separation value")->delimiter(',');
  sim->add_flag("--cv-sweep", config.cv_sweep, "Sweep test fraction {1/2,1/5,1/10} x K {n/10,n/5,n}");
  sim->add_flag("--local-maxima", config.local_maxima, "Print distinct local maxima counts");
  sim->add_flag("--timing", config.timing, "Include wall-clock times in the report");
  sim->add_flag("-q,--quiet", config.quiet, "No per-replication log lines");

  auto* eval = app.add_subcommand("evaluate", "MAD and ARand between two label or posterior files");
  eval->add_option("--truth", config.truth, "Reference labels (one column) or posteriors");
  eval->add_option("--estimate", config.estimate, "Estimated labels or posteriors");
  eval->add_flag("--header", config.has_header, "Files start with a header line");
  eval->add_option("-o,--output", config.output, "Write the JSON result here instead of stdout");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : eqgmm::cli::kConfigError;
  }

  // simulate derives G from the weights
  if (sim->parsed()) config.g = static_cast<int>(config.weights.size());

  if (fit->parsed()) return eqgmm::cli::guarded(eqgmm::cli::cmd_fit, config);
  if (tune->parsed()) return eqgmm::cli::guarded(eqgmm::cli::cmd_tune, config);
  if (sim->parsed()) return eqgmm::cli::guarded(eqgmm::cli::cmd_simulate, config);
  return eqgmm::cli::guarded(eqgmm::cli::cmd_evaluate, config);
}
