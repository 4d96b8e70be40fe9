#pragma once

#include <iosfwd>
#include <optional>
#include <string>

#include "fbps/report.hpp"

// Command implementations behind the fbps executable. Each returns the
// process exit code: 0 success, 1 usage/runtime error, 2 certificate failure.

namespace fbps {

struct RunOptions {
  std::string builtin;      // builtin name or "all"; empty when using a config
  std::string config_path;  // path to a key = value run configuration
  std::string out_dir = ".";
  std::optional<std::uint64_t> seed;  // overrides the config/builtin seed
  std::optional<int> max_iters;
  std::optional<double> gamma;  // fixed step size; unset keeps the auto policy
  bool plot = true;
};

/// Runs one experiment (or every builtin) and writes
/// <name>.trajectory.csv, <name>.report.csv and <name>.svg into out_dir.
/// `run --builtin all` fans experiments out across threads, capped by the
/// FB_PS_THREADS environment variable.
int cmd_run(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Prints the assumption certificate of the configured problem as key=value
/// lines. Exit 0 iff both the non-degeneracy and restricted-injectivity
/// certificates pass.
int cmd_certify(const RunOptions& opts, std::ostream& out, std::ostream& err);

/// Evaluates a closed-form rate prediction from a key = value parameter file
/// (regime plus its curvature constants) and prints regime, rho over the
/// configured step range, gamma_opt and rho_opt.
int cmd_predict(const std::string& config_path, std::ostream& out, std::ostream& err);

struct PlotOptions {
  std::string csv_path;
  std::string out_path;
  double rho = -1.0;  // predicted rate for the overlay; < 0 disables it
  int K = -1;         // identification iteration for the vertical rule
};

/// Renders the convergence profile of a trajectory CSV as an SVG file.
int cmd_plot(const PlotOptions& opts, std::ostream& out, std::ostream& err);

}  // namespace fbps
