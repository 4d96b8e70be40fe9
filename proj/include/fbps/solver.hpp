#pragma once

#include <optional>
#include <string>
#include <vector>

#include "fbps/regularizers.hpp"
#include "fbps/rng.hpp"
#include "fbps/smooth.hpp"

// The Forward-Backward iteration x_{k+1} = prox_{gamma_k J}(x_k - gamma_k
// grad F(x_k)) with step-size schedules, trajectory recording and
// high-accuracy reference solutions.

namespace fbps {

class StepSchedule {
 public:
  static StepSchedule constant(double gamma);
  static StepSchedule cyclic(std::vector<double> gammas);
  static StepSchedule random_in_interval(double lo, double hi, std::uint64_t seed);

  /// Step for iteration k. Random schedules are deterministic in k.
  double step(int k) const;

  double min_step() const;
  double max_step() const;

  /// Throws if the schedule leaves the convergence regime (max step >= 2/beta).
  void validate(double beta) const;

 private:
  StepSchedule() = default;
  enum class Mode { Constant, Cyclic, Random } mode_ = Mode::Constant;
  std::vector<double> gammas_;
  double lo_ = 0.0, hi_ = 0.0;
  std::uint64_t seed_ = 0;
};

struct SolverConfig {
  int max_iters = 50000;
  double stop_tol = 1e-10;   // on the fixed-point residual ||x_{k+1}-x_k|| / gamma_k
  int record_every = 1;
  double zero_tol = -1.0;    // forwarded to manifold detection; < 0 = default
  bool store_iterates = true;  // full iterates kept only when n <= 4096 anyway
};

enum class StopReason { Converged, MaxIters, NumericalFailure };

struct TrajectoryRecord {
  int k = 0;
  double gamma = 0.0;
  double dist = -1.0;  // ||x_k - x_ref||, or -1 if no reference
  double objective = 0.0;
  // missing when undefined at the iterate (l_inf at x = 0)
  std::optional<ManifoldDescriptor> descriptor;
  std::optional<Vec> iterate;
};

struct Trajectory {
  std::vector<TrajectoryRecord> records;
  StopReason stop = StopReason::MaxIters;
  int total_iters = 0;
  double final_residual = 0.0;
  double x_ref_norm = 0.0;  // 0 when no reference was supplied
  bool has_reference = false;
  Vec final_iterate;
};

/// Runs the FB iteration from x0 until the fixed-point residual drops below
/// cfg.stop_tol or cfg.max_iters is hit. Metrics are recorded every
/// cfg.record_every iterations and at termination. Throws if the schedule
/// violates gamma < 2/beta or an iterate becomes non-finite.
Trajectory fb_solve(const SmoothTerm& F, const Regularizer& J, const Vec& x0,
                    const StepSchedule& schedule, const SolverConfig& cfg,
                    const std::optional<Vec>& x_ref = std::nullopt);

struct ReferenceSolution {
  Vec x;
  bool polished = false;       // restricted first-order system solved on T
  bool polish_warning = false; // polish attempted but rejected or singular
};

/// High-accuracy minimizer: FB with gamma = 1/beta to residual
/// 1e-12 (1 + ||y||), then for constant-sign regularizers a dense solve of
/// the restricted first-order system on T, accepted only if the manifold
/// descriptor is unchanged.
ReferenceSolution reference_solution(const SmoothTerm& F, const Regularizer& J,
                                     const SolverConfig& cfg = {});

}  // namespace fbps
