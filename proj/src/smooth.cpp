#include "fbps/smooth.hpp"

#include <cmath>

namespace fbps {

SmoothTerm::SmoothTerm(Mat A, Vec y) : A_(std::move(A)), y_(std::move(y)) {
  ensure_finite(A_, "smooth term operator");
  ensure_finite(y_, "smooth term observation");
  if (A_.rows() != y_.size())
    throw std::invalid_argument("smooth term: A rows must match y size");
  gram_ = A_.transpose() * A_;
  Aty_ = A_.transpose() * y_;
  beta_ = largest_singular_value_sq(A_);
}

SmoothTerm SmoothTerm::least_squares(Mat A, Vec y) {
  return SmoothTerm(std::move(A), std::move(y));
}

double SmoothTerm::value(const Vec& x) const {
  if (x.size() != A_.cols()) throw std::invalid_argument("smooth value: dimension mismatch");
  return 0.5 * (A_ * x - y_).squaredNorm();
}

Vec SmoothTerm::gradient(const Vec& x) const {
  if (x.size() != A_.cols())
    throw std::invalid_argument("smooth gradient: dimension mismatch");
  return gram_ * x - Aty_;
}

double SmoothTerm::lipschitz_beta() const { return beta_; }

CurvatureReport SmoothTerm::curvature_on(const SubspaceBasis& T) const {
  if (T.dim() == 0) throw std::invalid_argument("curvature_on: empty subspace");
  auto [lo, hi] = restricted_operator_spectrum(A_, T);
  CurvatureReport r;
  r.sigma_m = lo;
  r.sigma_M = hi;
  r.alpha = lo;
  r.nu = hi;
  r.sigma_max = beta_;
  return r;
}

Mat gaussian_blur_operator(int n, double kernel_sigma) {
  if (n < 3) throw std::invalid_argument("gaussian_blur_operator: n must be at least 3");
  if (kernel_sigma <= 0.0)
    throw std::invalid_argument("gaussian_blur_operator: kernel_sigma must be positive");
  int radius = static_cast<int>(std::ceil(4.0 * kernel_sigma));
  radius = std::min(radius, n - 1);
  Vec kernel(2 * radius + 1);
  for (int j = -radius; j <= radius; ++j)
    kernel[j + radius] = std::exp(-0.5 * j * j / (kernel_sigma * kernel_sigma));
  kernel /= kernel.sum();
  Mat M = Mat::Zero(n, n);
  for (int i = 0; i < n; ++i)
    for (int j = -radius; j <= radius; ++j) {
      const int c = i + j;
      if (c >= 0 && c < n) M(i, c) = kernel[j + radius];
    }
  return M;
}

}  // namespace fbps
