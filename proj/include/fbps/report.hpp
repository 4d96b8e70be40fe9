#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "fbps/harness.hpp"

// File formats of the CLI: trajectory CSV, report CSV, the flat key = value
// run configuration, and the SVG convergence plot.

namespace fbps {

/// Shortest round-trip decimal representation at 17 significant digits.
std::string format_double(double v);

/// Header: k,gamma,dist,objective,manifold_dim,identified
void write_trajectory_csv(std::ostream& os, const Trajectory& traj, const Regularizer& J,
                          const IdentificationResult& ident);

/// key,value rows covering certificate, prediction, observed rate and the
/// acceptance flags.
void write_report_csv(std::ostream& os, const ExperimentReport& rep);

struct TrajectoryPoint {
  double k = 0.0;
  double dist = 0.0;
};

/// Reads back the k and dist columns of a trajectory CSV. Throws on a
/// malformed header or row.
std::vector<TrajectoryPoint> read_trajectory_csv(std::istream& is);

/// Semi-log convergence profile: observed ||x_k - x*|| with the predicted
/// rho^(k-K) ||x_K - x*|| overlay and a vertical rule at the identification
/// iteration K (when K >= 0).
std::string render_convergence_svg(const std::vector<TrajectoryPoint>& observed,
                                   double rho, int K);

struct RunConfig {
  ExperimentSpec spec;
  std::string out_dir = ".";
  bool plot = true;
};

/// Flat key = value configuration ('#' comments allowed). Requires
/// version = 1; unknown keys are rejected.
RunConfig parse_run_config(std::istream& is);

}  // namespace fbps
