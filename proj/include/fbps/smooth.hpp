#pragma once

#include "fbps/core.hpp"

// Smooth data-fidelity terms F(x) = (1/2) ||A x - y||^2 with gradient,
// Lipschitz constant and restricted curvature on a subspace.

namespace fbps {

struct CurvatureReport {
  double alpha = 0.0;      // smallest eigenvalue of A^*A restricted to T
  double nu = 0.0;         // Lipschitz constant of proj_T grad F proj_T (= sigma_M)
  double sigma_m = 0.0;
  double sigma_M = 0.0;
  double sigma_max = 0.0;  // largest eigenvalue of A^*A
};

class SmoothTerm {
 public:
  /// Least-squares fidelity (1/2)||A x - y||^2.
  static SmoothTerm least_squares(Mat A, Vec y);

  const Mat& A() const { return A_; }
  const Vec& y() const { return y_; }
  Eigen::Index dim() const { return A_.cols(); }

  double value(const Vec& x) const;

  /// A^T (A x - y).
  Vec gradient(const Vec& x) const;

  /// Lipschitz constant of the gradient: largest eigenvalue of A^T A.
  /// Computed once and cached.
  double lipschitz_beta() const;

  /// Restricted curvature on a nonempty subspace T.
  CurvatureReport curvature_on(const SubspaceBasis& T) const;

 private:
  SmoothTerm(Mat A, Vec y);

  Mat A_;
  Vec y_;
  Mat gram_;      // A^T A, precomputed (gradient cost independent of m)
  Vec Aty_;       // A^T y
  double beta_;
};

/// n x n matrix applying discrete convolution with a sampled Gaussian kernel
/// normalized to sum 1, zero padding at the boundary (rows near the edge sum
/// to less than 1). Symmetric up to the boundary truncation.
Mat gaussian_blur_operator(int n, double kernel_sigma);

}  // namespace fbps
