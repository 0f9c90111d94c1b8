#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "eqgmm/cross_validation.hpp"
#include "eqgmm/io.hpp"
#include "eqgmm/simulation.hpp"

namespace eqgmm::cli {

enum ExitCode : int { kOk = 0, kConfigError = 2, kDataError = 3, kEstimationError = 4 };

/// Effective settings of one invocation. Every report echoes the fields that
/// matter for its command.
struct RunConfig {
  // data
  std::string input;
  bool has_header = false;
  std::optional<int> label_column;  // 0-based
  int g = 3;

  // estimator
  std::string method = "cont";
  double dof = 4.0;
  std::optional<double> c;      // fixed scale balance
  std::vector<double> c_grid;   // empty means the default grid
  int n_splits = 25;
  double test_fraction = 0.1;
  int max_iters = 500;
  double rel_tol = 1e-8;
  int n_starts = 10;
  std::uint64_t seed = 1;

  // simulation
  int n = 50;
  int j = 8;
  std::vector<double> weights{0.2, 0.3, 0.5};
  double sep = 2.0;
  double mean_sd = 1.5;
  int replications = 50;
  bool full_scale = false;  // 250 replications
  std::vector<std::string> methods;
  std::vector<double> sep_sweep;
  bool cv_sweep = false;
  bool local_maxima = false;
  bool quiet = false;

  // evaluate
  std::string truth;
  std::string estimate;

  // output
  std::string output;  // explicit path; otherwise <command>-<scenario>-<seed>.<ext> in out_dir
  std::string out_dir = ".";
  std::string format = "json";
  bool timing = false;

  [[nodiscard]] EmControl control() const;
  [[nodiscard]] CvConfig cv() const;
};

int cmd_fit(const RunConfig& config);
int cmd_tune(const RunConfig& config);
int cmd_simulate(const RunConfig& config);
int cmd_evaluate(const RunConfig& config);

/// Runs a command body, mapping library exceptions to exit statuses and
/// printing a one-line diagnostic to stderr.
int guarded(int (*command)(const RunConfig&), const RunConfig& config);

}  // namespace eqgmm::cli
