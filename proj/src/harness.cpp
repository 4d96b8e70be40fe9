#include "fbps/harness.hpp"

#include <algorithm>
#include <cmath>

#include "fbps/rng.hpp"

namespace fbps {

Mat gen_gaussian_matrix(int m, int n, std::uint64_t seed) {
  if (m < 1 || n < 1) throw std::invalid_argument("gen_gaussian_matrix: dimensions >= 1");
  Rng rng(seed);
  Mat A(m, n);
  for (int i = 0; i < m; ++i)  // row-major fill order, part of the documented stream
    for (int j = 0; j < n; ++j) A(i, j) = rng.normal();
  return A;
}

namespace {

std::vector<int> distinct_indices(Rng& rng, int count, int range) {
  if (count > range) throw std::invalid_argument("gen_signal: structure impossible");
  std::vector<int> all(static_cast<size_t>(range));
  for (int i = 0; i < range; ++i) all[static_cast<size_t>(i)] = i;
  // Fisher-Yates prefix shuffle
  for (int i = 0; i < count; ++i) {
    const int j = i + static_cast<int>(rng.below(static_cast<std::uint64_t>(range - i)));
    std::swap(all[static_cast<size_t>(i)], all[static_cast<size_t>(j)]);
  }
  std::vector<int> out(all.begin(), all.begin() + count);
  std::sort(out.begin(), out.end());
  return out;
}

double signed_magnitude(Rng& rng) {
  const double sign = rng.uniform01() < 0.5 ? -1.0 : 1.0;
  return sign * rng.uniform(0.5, 1.5);
}

}  // namespace

Vec gen_signal(const ExperimentSpec& spec, std::uint64_t seed) {
  Rng rng(seed);
  switch (spec.kind) {
    case RegKind::L1: {
      Vec x = Vec::Zero(spec.n);
      for (int i : distinct_indices(rng, spec.sparsity, spec.n)) x[i] = signed_magnitude(rng);
      return x;
    }
    case RegKind::TV1D: {
      // piecewise constant with exactly `sparsity` jumps
      std::vector<int> jumps = distinct_indices(rng, spec.sparsity, spec.n - 1);
      Vec x(spec.n);
      double level = signed_magnitude(rng);
      size_t j = 0;
      for (int i = 0; i < spec.n; ++i) {
        x[i] = level;
        if (j < jumps.size() && i == jumps[j]) {
          level += signed_magnitude(rng);
          ++j;
        }
      }
      return x;
    }
    case RegKind::LInf: {
      Vec x(spec.n);
      for (int i = 0; i < spec.n; ++i) x[i] = rng.uniform(-0.8, 0.8);
      for (int i : distinct_indices(rng, spec.sparsity, spec.n))
        x[i] = rng.uniform01() < 0.5 ? -1.0 : 1.0;
      return x;
    }
    case RegKind::GroupL1L2: {
      if (spec.block_size <= 0 || spec.n % spec.block_size != 0)
        throw std::invalid_argument("gen_signal: invalid block structure");
      const int nblocks = spec.n / spec.block_size;
      Vec x = Vec::Zero(spec.n);
      for (int b : distinct_indices(rng, spec.active_blocks, nblocks))
        for (int i = 0; i < spec.block_size; ++i)
          x[b * spec.block_size + i] = signed_magnitude(rng);
      return x;
    }
    case RegKind::Nuclear: {
      if (spec.rank < 1 || spec.rank > std::min(spec.n1, spec.n2))
        throw std::invalid_argument("gen_signal: invalid rank");
      Mat L(spec.n1, spec.rank), R(spec.n2, spec.rank);
      for (int j = 0; j < spec.rank; ++j)
        for (int i = 0; i < spec.n1; ++i) L(i, j) = rng.normal();
      for (int j = 0; j < spec.rank; ++j)
        for (int i = 0; i < spec.n2; ++i) R(i, j) = rng.normal();
      Mat X = L * R.transpose() / std::sqrt(static_cast<double>(spec.rank));
      return Eigen::Map<const Vec>(X.data(), X.size());
    }
  }
  throw std::logic_error("unreachable");
}

Regularizer make_regularizer(const ExperimentSpec& spec, double lambda) {
  switch (spec.kind) {
    case RegKind::L1:
      return Regularizer::l1(lambda);
    case RegKind::TV1D:
      return Regularizer::tv1d(spec.n, lambda);
    case RegKind::LInf:
      return Regularizer::linf(lambda);
    case RegKind::GroupL1L2:
      return Regularizer::group_l1l2_uniform(spec.n, spec.block_size, lambda);
    case RegKind::Nuclear:
      return Regularizer::nuclear(spec.n1, spec.n2, lambda);
  }
  throw std::logic_error("unreachable");
}

ExperimentReport run_experiment(const ExperimentSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("run_experiment: n must be positive");
  if (!spec.deconvolution && spec.m < 1)
    throw std::invalid_argument("run_experiment: m must be positive");

  ExperimentReport rep;
  rep.spec = spec;

  Mat A = spec.deconvolution ? gaussian_blur_operator(spec.n, spec.kernel_sigma)
                             : gen_gaussian_matrix(spec.m, spec.n, child_seed(spec.seed, 0));
  const int m = static_cast<int>(A.rows());
  rep.x_true = gen_signal(spec, child_seed(spec.seed, 1));
  Vec Ax = A * rep.x_true;

  const double delta = spec.delta < 0.0 ? 0.01 * Ax.norm() / std::sqrt(m) : spec.delta;
  Rng noise_rng(child_seed(spec.seed, 2));
  Vec y = Ax;
  for (Eigen::Index i = 0; i < y.size(); ++i) y[i] += delta * noise_rng.normal();

  double lambda = spec.lambda;
  if (lambda < 0.0)
    lambda = spec.lambda_mult * 2.0 * delta * std::sqrt(2.0 * std::log(spec.n));
  if (lambda <= 0.0)
    throw std::invalid_argument("run_experiment: lambda must be positive (set it "
                                "explicitly for noiseless runs)");
  rep.lambda_used = lambda;
  rep.delta_used = delta;
  rep.spec.lambda = lambda;
  rep.spec.delta = delta;

  Regularizer J = make_regularizer(spec, lambda);
  SmoothTerm F = SmoothTerm::least_squares(std::move(A), y);
  const double beta = F.lipschitz_beta();

  SolverConfig run_cfg = spec.solver;
  if (run_cfg.stop_tol < 0.0) run_cfg.stop_tol = 1e-9 * (1.0 + y.norm());
  run_cfg.store_iterates = false;

  ReferenceSolution ref = reference_solution(F, J, run_cfg);
  rep.x_star = ref.x;
  rep.reference_polished = ref.polished;

  try {
    rep.certificate = certify(F, J, rep.x_star, run_cfg.zero_tol);
    rep.certificate_ok =
        rep.certificate.nondegeneracy_margin > 0.0 && rep.certificate.restricted_injectivity;
  } catch (const std::exception& e) {
    rep.certificate_ok = false;
    rep.certificate_error = e.what();
  }

  // Step size: the regime's optimum, clipped into the global convergence
  // window (0, 2/beta).
  double gamma = spec.gamma;
  const double safe_cap = 0.95 * 2.0 / beta;
  if (gamma <= 0.0) {
    gamma = safe_cap;
    if (rep.certificate_ok) {
      const double sm = rep.certificate.sigma_m, sM = rep.certificate.sigma_M;
      switch (J.smoothness_class()) {
        case SmoothnessClass::LinearSubspaceConstantSign:
        case SmoothnessClass::AffineSubspace:
        case SmoothnessClass::LinearSubspace:
          if (J.kind() == RegKind::GroupL1L2)
            gamma = std::min(sm / (sM * sM), safe_cap);  // Theorem-(ii) optimum
          else
            gamma = std::min(2.0 / (sm + sM), safe_cap);  // quadratic R optimum
          break;
        case SmoothnessClass::GeneralManifold:
          gamma = std::min(sm / (beta * beta), safe_cap);  // quadratic Q vertex
          break;
      }
    }
  }
  rep.gamma_used = gamma;
  rep.spec.gamma = gamma;

  if (rep.certificate_ok) {
    try {
      if (J.kind() == RegKind::GroupL1L2) {
        // flagged as an upper bound: e_x is not locally constant here
        rep.prediction = predict_rate_r_subspace(rep.certificate.sigma_m,
                                                 rep.certificate.sigma_M, beta, gamma, gamma);
      } else {
        rep.prediction =
            predict_rate_quadratic(rep.certificate.sigma_m, rep.certificate.sigma_M,
                                   rep.certificate.sigma_max, gamma, gamma,
                                   J.smoothness_class());
      }
      rep.prediction_ok = true;
    } catch (const std::exception&) {
      rep.prediction_ok = false;
    }
  }

  Trajectory traj = fb_solve(F, J, Vec::Zero(F.dim()), StepSchedule::constant(gamma),
                             run_cfg, rep.x_star);
  rep.total_iters = traj.total_iters;
  rep.stop = traj.stop;
  rep.final_dist = traj.records.empty() ? -1.0 : traj.records.back().dist;

  ManifoldDescriptor target = J.descriptor(rep.x_star, run_cfg.zero_tol);
  rep.identification = detect_identification(traj, target, J);
  rep.identified_ok =
      rep.identification.K.has_value() && rep.identification.confirming_records >= 50;

  if (rep.certificate_ok && rep.prediction_ok && rep.identification.K) {
    try {
      rep.observed_rate = fit_observed_rate(traj, *rep.identification.K);
    } catch (const std::exception&) {
      rep.observed_rate = -1.0;
    }
  }

  if (rep.observed_rate >= 0.0 && rep.prediction_ok) {
    const double pred = rep.prediction.rho_at(gamma);
    switch (J.kind()) {
      case RegKind::L1:
      case RegKind::TV1D:
      case RegKind::LInf:
        rep.rate_ok = std::abs(rep.observed_rate - pred) <= 0.05 * pred;
        break;
      case RegKind::GroupL1L2:
        rep.rate_ok = rep.observed_rate < pred && rep.observed_rate <= pred + 0.02;
        break;
      case RegKind::Nuclear:
        rep.rate_ok = rep.observed_rate <= pred + 0.02;
        break;
    }
  }
  rep.passed = rep.certificate_ok && rep.identified_ok && rep.rate_ok;
  rep.trajectory = std::move(traj);
  return rep;
}

ExperimentReport deconvolution_experiment(int n, double kernel_sigma, int jump_count,
                                          double delta, double lambda, std::uint64_t seed) {
  ExperimentSpec spec;
  spec.name = "deconv";
  spec.kind = RegKind::TV1D;
  spec.n = n;
  spec.m = n;
  spec.sparsity = jump_count;
  spec.delta = delta;
  spec.lambda = lambda;
  spec.seed = seed;
  spec.deconvolution = true;
  spec.kernel_sigma = kernel_sigma;
  spec.solver.stop_tol = -1.0;
  return run_experiment(spec);
}

std::vector<std::string> builtin_names(bool include_full_scale) {
  std::vector<std::string> names = {"lasso-a", "tv-b", "linf-c", "group-d", "nuclear-e",
                                    "deconv-f"};
  if (include_full_scale) names.push_back("nuclear-e-full");
  return names;
}

ExperimentSpec builtin_spec(const std::string& name) {
  ExperimentSpec s;
  s.name = name;
  s.seed = 1;
  s.solver.stop_tol = -1.0;  // auto: 1e-9 (1 + ||y||)
  if (name == "lasso-a") {
    s.kind = RegKind::L1;
    s.m = 48;
    s.n = 128;
    s.sparsity = 8;
  } else if (name == "tv-b") {
    s.kind = RegKind::TV1D;
    s.m = 48;
    s.n = 128;
    s.sparsity = 8;
  } else if (name == "linf-c") {
    s.kind = RegKind::LInf;
    s.m = 123;
    s.n = 128;
    s.sparsity = 10;
    s.lambda_mult = 16.0;
    s.solver.max_iters = 400000;
  } else if (name == "group-d") {
    s.kind = RegKind::GroupL1L2;
    s.m = 48;
    s.n = 128;
    s.block_size = 4;
    s.active_blocks = 2;
    s.lambda_mult = 8.0;
  } else if (name == "nuclear-e") {
    s.kind = RegKind::Nuclear;
    s.n1 = s.n2 = 20;
    s.n = 400;
    s.rank = 3;
    s.m = 333;  // 3x the manifold dimension r(n1+n2-r), same ratio as nuclear-e-full
    s.lambda_mult = 64.0;
    s.solver.max_iters = 200000;
    s.solver.record_every = 5;
  } else if (name == "nuclear-e-full") {
    s.kind = RegKind::Nuclear;
    s.n1 = s.n2 = 50;
    s.n = 2500;
    s.rank = 5;
    s.m = 1425;
    s.lambda_mult = 64.0;
    s.solver.max_iters = 400000;
    s.solver.record_every = 20;
  } else if (name == "deconv-f") {
    s.kind = RegKind::TV1D;
    s.n = 128;
    s.m = 128;
    s.sparsity = 8;
    s.deconvolution = true;
    s.kernel_sigma = 2.0;
    s.solver.max_iters = 200000;
  } else {
    throw std::invalid_argument("unknown builtin experiment: " + name);
  }
  return s;
}

}  // namespace fbps
