#pragma once

#include <optional>

#include "fbps/solver.hpp"

// Finite-identification detection, assumption certificates, closed-form
// local linear rate predictions and observed-rate fitting.

namespace fbps {

struct CertificateReport {
  double nondegeneracy_margin = 0.0;  // > 0 iff -grad F(x*) lies in ri(dJ(x*))
  double alpha = 0.0;                 // restricted curvature constant on T
  bool restricted_injectivity = false;
  bool uniqueness_implied = false;    // both certificates pass
  double sigma_m = 0.0, sigma_M = 0.0, sigma_max = 0.0;
  Eigen::Index subspace_dim = 0;
};

/// Regularizer-specific dual slack of -grad F(x_star) into the relative
/// interior of dJ(x_star). Positive means the non-degeneracy condition holds.
double nondegeneracy_margin(const SmoothTerm& F, const Regularizer& J, const Vec& x_star,
                            double zero_tol = -1.0);

/// Certificate at an (approximately stationary) minimizer. Throws if the
/// fixed-point residual of x_star exceeds 1e-8 (1 + ||x_star||).
CertificateReport certify(const SmoothTerm& F, const Regularizer& J, const Vec& x_star,
                          double zero_tol = -1.0);

enum class RateRegime { QGeneral, RSubspace, QQuadratic, RQuadratic, DegeneratePSFLS };

struct RatePrediction {
  RateRegime regime = RateRegime::QGeneral;
  double rho = 1.0;       // worst rate over [gamma_lo, gamma_hi]
  double gamma_lo = 0.0, gamma_hi = 0.0;
  double gamma_validity_hi = 0.0;  // rates valid for gamma in (0, this)
  double gamma_opt = 0.0;
  double rho_opt = 1.0;
  // rate-function parameters (whichever apply to the regime)
  double alpha = 0.0, beta = 0.0, nu = 0.0;
  double sigma_m = 0.0, sigma_M = 0.0, sigma_max = 0.0, phi = 0.0;

  /// The regime's per-step rate at a given step size.
  double rho_at(double gamma) const;
};

struct IdentificationResult {
  std::optional<int> K;  // first recorded iteration from which the descriptor
                         // matches the target through the end of the record
  std::optional<ManifoldDescriptor> descriptor_at_K;
  int confirming_records = 0;  // records at k > K that match
};

IdentificationResult detect_identification(const Trajectory& traj,
                                           const ManifoldDescriptor& target,
                                           const Regularizer& J);

/// Q-linear rate of the general (curved-manifold) regime:
/// rho^2 = max(q(gamma_lo), q(gamma_hi)), q(g) = 1 - 2 alpha g + beta^2 g^2.
/// Valid for gamma in (0, min(2 alpha / beta^2, 2 / beta)).
RatePrediction predict_rate_q_general(double alpha, double beta, double gamma_lo,
                                      double gamma_hi);

/// R-linear rate when the manifold is a (affine) subspace:
/// rho_k^2 = 1 - 2 alpha g + nu^2 g^2, optimum rho* = sqrt(1 - alpha^2/nu^2)
/// at gamma = alpha / nu^2.
RatePrediction predict_rate_r_subspace(double alpha, double nu, double beta,
                                       double gamma_lo, double gamma_hi);

/// Refined rates for quadratic F. Subspace classes get the sharp R-branch
/// rho(g) = max(|1 - g sigma_m|, |1 - g sigma_M|) with optimum
/// (phi - 1)/(phi + 1) at gamma = 2/(sigma_m + sigma_M); the general-manifold
/// class falls back to the Q-branch with (alpha, beta) = (sigma_m, sigma_max).
RatePrediction predict_rate_quadratic(double sigma_m, double sigma_M, double sigma_max,
                                      double gamma_lo, double gamma_hi,
                                      SmoothnessClass subspace_class);

/// Degenerate constant-sign regime: restricted injectivity may fail on
/// V = ker(A_T); the R-linear rate uses the smallest nonzero eigenvalue of
/// the restricted operator instead. Throws if A_T is injective (use
/// predict_rate_quadratic) .
RatePrediction predict_rate_degenerate(const SmoothTerm& F, const SubspaceBasis& T,
                                       double gamma_lo, double gamma_hi);

/// exp(least-squares slope) of log ||x_k - x_ref|| versus k over the records
/// at k >= from_k that sit above the numerical noise floor
/// 1e3 eps (1 + ||x_ref||). Requires at least 10 qualifying points.
double fit_observed_rate(const Trajectory& traj, int from_k);

}  // namespace fbps
