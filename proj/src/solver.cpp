#include "fbps/solver.hpp"

#include <cmath>
#include <limits>

#include "fbps/analysis.hpp"

namespace fbps {

StepSchedule StepSchedule::constant(double gamma) {
  if (gamma <= 0.0) throw std::invalid_argument("step schedule: gamma must be positive");
  StepSchedule s;
  s.mode_ = Mode::Constant;
  s.gammas_ = {gamma};
  s.lo_ = s.hi_ = gamma;
  return s;
}

StepSchedule StepSchedule::cyclic(std::vector<double> gammas) {
  if (gammas.empty()) throw std::invalid_argument("step schedule: empty cycle");
  StepSchedule s;
  s.mode_ = Mode::Cyclic;
  s.lo_ = s.hi_ = gammas[0];
  for (double g : gammas) {
    if (g <= 0.0) throw std::invalid_argument("step schedule: gamma must be positive");
    s.lo_ = std::min(s.lo_, g);
    s.hi_ = std::max(s.hi_, g);
  }
  s.gammas_ = std::move(gammas);
  return s;
}

StepSchedule StepSchedule::random_in_interval(double lo, double hi, std::uint64_t seed) {
  if (!(0.0 < lo && lo <= hi))
    throw std::invalid_argument("step schedule: need 0 < lo <= hi");
  StepSchedule s;
  s.mode_ = Mode::Random;
  s.lo_ = lo;
  s.hi_ = hi;
  s.seed_ = seed;
  return s;
}

double StepSchedule::step(int k) const {
  switch (mode_) {
    case Mode::Constant:
      return gammas_[0];
    case Mode::Cyclic:
      return gammas_[static_cast<size_t>(k) % gammas_.size()];
    case Mode::Random: {
      Rng r(child_seed(seed_, static_cast<std::uint64_t>(k)));
      return r.uniform(lo_, hi_);
    }
  }
  throw std::logic_error("unreachable");
}

double StepSchedule::min_step() const { return lo_; }
double StepSchedule::max_step() const { return hi_; }

void StepSchedule::validate(double beta) const {
  if (beta <= 0.0) return;  // F constant: any positive step converges in one prox
  if (hi_ >= 2.0 / beta)
    throw std::invalid_argument("step schedule: max step must stay below 2/beta = " +
                                std::to_string(2.0 / beta));
}

namespace {

std::optional<ManifoldDescriptor> try_descriptor(const Regularizer& J, const Vec& x,
                                                 double zero_tol) {
  try {
    return J.descriptor(x, zero_tol);
  } catch (const std::invalid_argument&) {
    return std::nullopt;  // e.g. l_inf at x = 0
  }
}

}  // namespace

Trajectory fb_solve(const SmoothTerm& F, const Regularizer& J, const Vec& x0,
                    const StepSchedule& schedule, const SolverConfig& cfg,
                    const std::optional<Vec>& x_ref) {
  ensure_finite(x0, "fb_solve x0");
  if (x0.size() != F.dim()) throw std::invalid_argument("fb_solve: dimension mismatch");
  if (cfg.max_iters < 1) throw std::invalid_argument("fb_solve: max_iters must be >= 1");
  if (cfg.record_every < 1) throw std::invalid_argument("fb_solve: record_every must be >= 1");
  schedule.validate(F.lipschitz_beta());

  Trajectory traj;
  if (x_ref) {
    traj.has_reference = true;
    traj.x_ref_norm = x_ref->norm();
  }
  const bool keep_iterates = cfg.store_iterates && x0.size() <= 4096;

  Vec x = x0;
  auto record = [&](int k, double gamma) {
    TrajectoryRecord rec;
    rec.k = k;
    rec.gamma = gamma;
    rec.dist = x_ref ? (x - *x_ref).norm() : -1.0;
    rec.objective = F.value(x) + J.value(x);
    rec.descriptor = try_descriptor(J, x, cfg.zero_tol);
    if (keep_iterates) rec.iterate = x;
    traj.records.push_back(std::move(rec));
  };

  record(0, schedule.step(0));
  double residual = std::numeric_limits<double>::infinity();
  int k = 0;
  for (; k < cfg.max_iters; ++k) {
    const double gamma = schedule.step(k);
    Vec xn = J.prox(x - gamma * F.gradient(x), gamma);
    if (!xn.allFinite()) throw std::runtime_error("fb_solve: non-finite iterate at k=" +
                                                  std::to_string(k + 1));
    residual = (xn - x).norm() / gamma;
    x = std::move(xn);
    const bool done = residual <= cfg.stop_tol || k + 1 == cfg.max_iters;
    if ((k + 1) % cfg.record_every == 0 || done) record(k + 1, gamma);
    if (residual <= cfg.stop_tol) {
      traj.stop = StopReason::Converged;
      ++k;
      break;
    }
  }
  if (traj.stop != StopReason::Converged) {
    traj.stop = StopReason::MaxIters;
    // k == max_iters here
  }
  traj.total_iters = k;
  traj.final_residual = residual;
  traj.final_iterate = std::move(x);
  return traj;
}

ReferenceSolution reference_solution(const SmoothTerm& F, const Regularizer& J,
                                     const SolverConfig& cfg) {
  const double beta = F.lipschitz_beta();
  if (beta <= 0.0) throw std::invalid_argument("reference_solution: zero operator");
  SolverConfig rcfg = cfg;
  rcfg.stop_tol = 1e-12 * (1.0 + F.y().norm());
  rcfg.max_iters = std::max(cfg.max_iters, 200000);
  rcfg.record_every = rcfg.max_iters;  // metrics not needed here
  rcfg.store_iterates = false;

  Trajectory traj = fb_solve(F, J, Vec::Zero(F.dim()), StepSchedule::constant(1.0 / beta),
                             rcfg, std::nullopt);
  ReferenceSolution out;
  out.x = traj.final_iterate;

  if (J.smoothness_class() != SmoothnessClass::LinearSubspaceConstantSign) return out;

  // Polish: solve the restricted first-order system on T exactly.
  // proj_T grad F(x) + e = 0 with x = B u gives (B^T A^T A B) u = B^T (A^T y - e).
  try {
    ModelSubspace T = J.model_subspace(out.x, cfg.zero_tol);
    if (T.basis.dim() == 0) return out;
    Vec e = J.generalized_sign(out.x, cfg.zero_tol);
    const Mat& B = T.basis.matrix();
    Mat AB = F.A() * B;
    Mat M = AB.transpose() * AB;
    Vec rhs = B.transpose() * (F.A().transpose() * F.y() - e);
    Eigen::FullPivLU<Mat> lu(M);
    lu.setThreshold(1e-10);
    if (!lu.isInvertible()) {
      out.polish_warning = true;
      return out;
    }
    Vec x_pol = B * lu.solve(rhs);
    const bool same = same_descriptor(J.descriptor(x_pol, cfg.zero_tol), T.descriptor);
    if (same && nondegeneracy_margin(F, J, x_pol, cfg.zero_tol) > 0.0) {
      out.x = std::move(x_pol);
      out.polished = true;
    } else {
      out.polish_warning = true;
    }
  } catch (const std::exception&) {
    out.polish_warning = true;
  }
  return out;
}

}  // namespace fbps
