#include "fbps/analysis.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fbps {

namespace {

double q_form(double alpha, double c, double gamma) {
  return 1.0 - 2.0 * alpha * gamma + c * c * gamma * gamma;
}

void check_step_range(double gamma_lo, double gamma_hi, double validity_hi,
                      const char* who) {
  if (!(0.0 < gamma_lo && gamma_lo <= gamma_hi))
    throw std::invalid_argument(std::string(who) + ": need 0 < gamma_lo <= gamma_hi");
  if (gamma_hi >= validity_hi)
    throw std::invalid_argument(std::string(who) + ": step range exceeds validity (0, " +
                                std::to_string(validity_hi) + ")");
}

}  // namespace

double nondegeneracy_margin(const SmoothTerm& F, const Regularizer& J, const Vec& x_star,
                            double zero_tol) {
  const Vec g = -F.gradient(x_star);  // candidate element of dJ(x_star)
  const double lambda = J.lambda();
  const double tol = J.resolve_zero_tol(x_star, zero_tol);
  switch (J.kind()) {
    case RegKind::L1: {
      double worst = 0.0;
      for (Eigen::Index i = 0; i < x_star.size(); ++i)
        if (std::abs(x_star[i]) <= tol) worst = std::max(worst, std::abs(g[i]));
      return lambda - worst;
    }
    case RegKind::GroupL1L2: {
      double worst = 0.0;
      for (const auto& b : J.blocks()) {
        double mx = 0.0, nb = 0.0;
        for (int i : b) {
          mx = std::max(mx, std::abs(x_star[i]));
          nb += g[i] * g[i];
        }
        if (mx <= tol) worst = std::max(worst, std::sqrt(nb));
      }
      return lambda - worst;
    }
    case RegKind::TV1D: {
      // dual coordinates p with D p = g (least squares; g lies in range(D)
      // at stationarity). On non-jump positions p must be inside ]-lambda,
      // lambda[.
      const Eigen::Index n = x_star.size();
      Mat D = Mat::Zero(n, n - 1);
      for (Eigen::Index i = 0; i + 1 < n; ++i) {
        D(i, i) = -1.0;
        D(i + 1, i) = 1.0;
      }
      Vec p = D.colPivHouseholderQr().solve(g);
      double worst = 0.0;
      for (Eigen::Index i = 0; i + 1 < n; ++i)
        if (std::abs(x_star[i + 1] - x_star[i]) <= tol)
          worst = std::max(worst, std::abs(p[i]));
      return lambda - worst;
    }
    case RegKind::LInf: {
      const double m = x_star.lpNorm<Eigen::Infinity>();
      if (m <= tol)
        throw std::invalid_argument("nondegeneracy_margin: l_inf undefined at x = 0");
      // dJ = lambda conv{ s_i e_i : i in I }; ri membership means strictly
      // positive convex weights on the saturated face and zero off it.
      double off_face = 0.0, weight_sum = 0.0;
      double min_weight = std::numeric_limits<double>::infinity();
      for (Eigen::Index i = 0; i < x_star.size(); ++i) {
        if (std::abs(x_star[i]) >= m - tol) {
          const double w = (x_star[i] > 0.0 ? 1.0 : -1.0) * g[i];
          weight_sum += w;
          min_weight = std::min(min_weight, w);
        } else {
          off_face = std::max(off_face, std::abs(g[i]));
        }
      }
      const double infeas = std::max(off_face, std::abs(weight_sum - lambda));
      if (infeas > 1e-6 * std::max(1.0, lambda)) return -infeas;
      return min_weight;
    }
    case RegKind::Nuclear: {
      ModelSubspace T = J.model_subspace(x_star, zero_tol);
      const int r = static_cast<int>(T.U.cols());
      Eigen::Map<const Mat> G(g.data(), J.n1(), J.n2());
      if (r == std::min(J.n1(), J.n2())) return lambda;  // no off-manifold block
      // complement frames via full QR of the rank-r factors
      Eigen::HouseholderQR<Mat> qu(T.U), qv(T.V);
      Mat Qu = qu.householderQ() * Mat::Identity(J.n1(), J.n1());
      Mat Qv = qv.householderQ() * Mat::Identity(J.n2(), J.n2());
      Mat Gperp = Qu.rightCols(J.n1() - r).transpose() * G * Qv.rightCols(J.n2() - r);
      return lambda - thin_svd(Gperp).sigma[0];
    }
  }
  throw std::logic_error("unreachable");
}

CertificateReport certify(const SmoothTerm& F, const Regularizer& J, const Vec& x_star,
                          double zero_tol) {
  const double beta = F.lipschitz_beta();
  const double gamma = 1.0 / beta;
  const double residual =
      (J.prox(x_star - gamma * F.gradient(x_star), gamma) - x_star).norm() / gamma;
  if (residual > 1e-8 * (1.0 + x_star.norm()))
    throw std::runtime_error("certify: x_star is not stationary (fixed-point residual " +
                             std::to_string(residual) + ")");

  CertificateReport rep;
  rep.nondegeneracy_margin = nondegeneracy_margin(F, J, x_star, zero_tol);
  ModelSubspace T = J.model_subspace(x_star, zero_tol);
  rep.subspace_dim = T.basis.dim();
  if (T.basis.dim() > 0) {
    CurvatureReport c = F.curvature_on(T.basis);
    rep.alpha = c.alpha;
    rep.sigma_m = c.sigma_m;
    rep.sigma_M = c.sigma_M;
    rep.sigma_max = c.sigma_max;
  } else {
    rep.sigma_max = beta;
    rep.alpha = std::numeric_limits<double>::infinity();  // vacuous on {0}
  }
  rep.restricted_injectivity = rep.alpha > 1e-9 * std::max(1.0, rep.sigma_max);
  rep.uniqueness_implied = rep.nondegeneracy_margin > 0.0 && rep.restricted_injectivity;
  return rep;
}

double RatePrediction::rho_at(double gamma) const {
  switch (regime) {
    case RateRegime::QGeneral:
    case RateRegime::DegeneratePSFLS:
      return std::sqrt(std::max(0.0, q_form(alpha, beta, gamma)));
    case RateRegime::RSubspace:
      return std::sqrt(std::max(0.0, q_form(alpha, nu, gamma)));
    case RateRegime::QQuadratic:
      return std::sqrt(std::max(0.0, q_form(sigma_m, sigma_max, gamma)));
    case RateRegime::RQuadratic:
      return std::max(std::abs(1.0 - gamma * sigma_m), std::abs(1.0 - gamma * sigma_M));
  }
  throw std::logic_error("unreachable");
}

IdentificationResult detect_identification(const Trajectory& traj,
                                           const ManifoldDescriptor& target,
                                           const Regularizer& J) {
  (void)J;
  if (traj.records.empty())
    throw std::invalid_argument("detect_identification: empty trajectory");
  // walk backwards: find the earliest record from which every later record
  // matches the target
  std::optional<size_t> first_match;
  for (size_t i = traj.records.size(); i-- > 0;) {
    const auto& rec = traj.records[i];
    bool match = false;
    if (rec.descriptor) {
      try {
        match = same_descriptor(*rec.descriptor, target);
      } catch (const std::invalid_argument&) {
        match = false;  // descriptor of another kind
      }
    }
    if (!match) break;
    first_match = i;
  }
  IdentificationResult res;
  if (first_match) {
    res.K = traj.records[*first_match].k;
    res.descriptor_at_K = traj.records[*first_match].descriptor;
    res.confirming_records = static_cast<int>(traj.records.size() - *first_match - 1);
  }
  return res;
}

RatePrediction predict_rate_q_general(double alpha, double beta, double gamma_lo,
                                      double gamma_hi) {
  if (alpha <= 0.0 || beta <= 0.0)
    throw std::invalid_argument("predict_rate_q_general: need alpha, beta > 0");
  RatePrediction p;
  p.regime = RateRegime::QGeneral;
  p.alpha = alpha;
  p.beta = beta;
  p.gamma_validity_hi = std::min(2.0 * alpha / (beta * beta), 2.0 / beta);
  check_step_range(gamma_lo, gamma_hi, p.gamma_validity_hi, "predict_rate_q_general");
  p.gamma_lo = gamma_lo;
  p.gamma_hi = gamma_hi;
  p.rho = std::sqrt(std::max(q_form(alpha, beta, gamma_lo), q_form(alpha, beta, gamma_hi)));
  p.gamma_opt = alpha / (beta * beta);  // vertex of q
  p.rho_opt = std::sqrt(std::max(0.0, 1.0 - alpha * alpha / (beta * beta)));
  return p;
}

RatePrediction predict_rate_r_subspace(double alpha, double nu, double beta,
                                       double gamma_lo, double gamma_hi) {
  if (alpha <= 0.0 || nu <= 0.0 || beta <= 0.0)
    throw std::invalid_argument("predict_rate_r_subspace: need alpha, nu, beta > 0");
  RatePrediction p;
  p.regime = RateRegime::RSubspace;
  p.alpha = alpha;
  p.nu = nu;
  p.beta = beta;
  p.gamma_validity_hi = std::min(2.0 * alpha / (nu * nu), 2.0 / beta);
  check_step_range(gamma_lo, gamma_hi, p.gamma_validity_hi, "predict_rate_r_subspace");
  p.gamma_lo = gamma_lo;
  p.gamma_hi = gamma_hi;
  p.rho = std::sqrt(std::max(q_form(alpha, nu, gamma_lo), q_form(alpha, nu, gamma_hi)));
  p.gamma_opt = alpha / (nu * nu);
  p.rho_opt = std::sqrt(std::max(0.0, 1.0 - alpha * alpha / (nu * nu)));
  return p;
}

RatePrediction predict_rate_quadratic(double sigma_m, double sigma_M, double sigma_max,
                                      double gamma_lo, double gamma_hi,
                                      SmoothnessClass subspace_class) {
  if (sigma_m <= 0.0)
    throw std::invalid_argument(
        "predict_rate_quadratic: sigma_m <= 0 (restricted injectivity fails); "
        "use predict_rate_degenerate");
  if (sigma_M < sigma_m || sigma_max < sigma_M)
    throw std::invalid_argument("predict_rate_quadratic: need sigma_m <= sigma_M <= sigma_max");
  RatePrediction p;
  p.sigma_m = sigma_m;
  p.sigma_M = sigma_M;
  p.sigma_max = sigma_max;
  p.phi = sigma_M / sigma_m;
  const bool subspace = subspace_class != SmoothnessClass::GeneralManifold;
  if (subspace) {
    p.regime = RateRegime::RQuadratic;
    p.gamma_validity_hi = 2.0 / sigma_max;
    check_step_range(gamma_lo, gamma_hi, p.gamma_validity_hi, "predict_rate_quadratic");
    p.gamma_lo = gamma_lo;
    p.gamma_hi = gamma_hi;
    p.rho = std::max(p.rho_at(gamma_lo), p.rho_at(gamma_hi));
    p.gamma_opt = 2.0 / (sigma_m + sigma_M);
    p.rho_opt = (p.phi - 1.0) / (p.phi + 1.0);
  } else {
    p.regime = RateRegime::QQuadratic;
    p.gamma_validity_hi = 2.0 * sigma_m / (sigma_max * sigma_max);
    check_step_range(gamma_lo, gamma_hi, p.gamma_validity_hi, "predict_rate_quadratic");
    p.gamma_lo = gamma_lo;
    p.gamma_hi = gamma_hi;
    p.rho = std::max(p.rho_at(gamma_lo), p.rho_at(gamma_hi));
    p.gamma_opt = std::min(sigma_m / (sigma_max * sigma_max), gamma_hi);
    p.rho_opt = p.rho_at(sigma_m / (sigma_max * sigma_max));
  }
  return p;
}

RatePrediction predict_rate_degenerate(const SmoothTerm& F, const SubspaceBasis& T,
                                       double gamma_lo, double gamma_hi) {
  if (T.dim() == 0) throw std::invalid_argument("predict_rate_degenerate: empty subspace");
  Mat AB = F.A() * T.matrix();
  Mat M = AB.transpose() * AB;
  Eigen::SelfAdjointEigenSolver<Mat> eig(M);
  const Vec ev = eig.eigenvalues();  // ascending
  const double scale = std::max(ev.maxCoeff(), 1.0);
  const double kernel_tol = 1e-10 * scale;
  double alpha = 0.0;
  Eigen::Index kernel_dim = 0;
  for (Eigen::Index i = 0; i < ev.size(); ++i) {
    if (ev[i] <= kernel_tol) {
      ++kernel_dim;
    } else {
      alpha = ev[i];  // smallest nonzero eigenvalue
      break;
    }
  }
  if (kernel_dim == 0)
    throw std::invalid_argument(
        "predict_rate_degenerate: A_T is injective; use predict_rate_quadratic");
  if (alpha <= 0.0)
    throw std::invalid_argument("predict_rate_degenerate: A_T vanishes on T");

  const double beta = F.lipschitz_beta();
  RatePrediction p;
  p.regime = RateRegime::DegeneratePSFLS;
  p.alpha = alpha;
  p.beta = beta;
  p.sigma_max = beta;
  p.gamma_validity_hi = std::min(2.0 * alpha / (beta * beta), 2.0 / beta);
  check_step_range(gamma_lo, gamma_hi, p.gamma_validity_hi, "predict_rate_degenerate");
  p.gamma_lo = gamma_lo;
  p.gamma_hi = gamma_hi;
  p.rho = std::sqrt(std::max(q_form(alpha, beta, gamma_lo), q_form(alpha, beta, gamma_hi)));
  p.gamma_opt = alpha / (beta * beta);
  p.rho_opt = std::sqrt(std::max(0.0, 1.0 - alpha * alpha / (beta * beta)));
  return p;
}

double fit_observed_rate(const Trajectory& traj, int from_k) {
  if (!traj.has_reference)
    throw std::invalid_argument("fit_observed_rate: trajectory has no reference distances");
  const double eps = std::numeric_limits<double>::epsilon();
  const double floor = 1e3 * eps * (1.0 + traj.x_ref_norm);
  std::vector<std::pair<double, double>> pts;  // (k, log dist)
  for (const auto& rec : traj.records) {
    if (rec.k < from_k || rec.dist <= floor) continue;
    pts.emplace_back(static_cast<double>(rec.k), std::log(rec.dist));
  }
  if (pts.size() < 10)
    throw std::invalid_argument("fit_observed_rate: fewer than 10 points above the noise floor");
  double mk = 0.0, md = 0.0;
  for (auto& [k, d] : pts) {
    mk += k;
    md += d;
  }
  mk /= static_cast<double>(pts.size());
  md /= static_cast<double>(pts.size());
  double num = 0.0, den = 0.0;
  for (auto& [k, d] : pts) {
    num += (k - mk) * (d - md);
    den += (k - mk) * (k - mk);
  }
  if (den == 0.0) throw std::invalid_argument("fit_observed_rate: degenerate window");
  return std::exp(num / den);
}

}  // namespace fbps
