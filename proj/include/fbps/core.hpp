#pragma once

#include <Eigen/Dense>
#include <stdexcept>
#include <utility>
#include <vector>

// Dense linear algebra and subspace machinery shared by all modules.

namespace fbps {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Throws std::invalid_argument if v contains NaN or Inf.
void ensure_finite(const Vec& v, const char* what = "vector");
void ensure_finite(const Mat& m, const char* what = "matrix");

/// An orthonormal basis of a linear subspace of R^n, stored as the n x d
/// matrix whose columns span it. d = 0 encodes the trivial subspace {0}.
class SubspaceBasis {
 public:
  /// Wraps a matrix whose columns are already orthonormal (checked to 1e-10).
  explicit SubspaceBasis(Mat basis);

  /// Builds an orthonormal basis of span(columns) by Gram-Schmidt with
  /// re-orthogonalization. Columns whose residual norm falls below 1e-12
  /// are dropped.
  static SubspaceBasis orthonormalize(const Mat& columns);

  /// Identity basis of R^n.
  static SubspaceBasis full(Eigen::Index n);

  /// The trivial subspace {0} inside R^n.
  static SubspaceBasis empty(Eigen::Index n);

  /// Basis spanning the given coordinate axes of R^n (0-based indices).
  static SubspaceBasis coordinates(Eigen::Index n, const std::vector<int>& idx);

  Eigen::Index ambient_dim() const { return basis_.rows(); }
  Eigen::Index dim() const { return basis_.cols(); }
  const Mat& matrix() const { return basis_; }

 private:
  Mat basis_;
};

/// Orthogonal projection of x onto the subspace: B (B^T x).
Vec project(const SubspaceBasis& basis, const Vec& x);

/// Smallest and largest eigenvalues of B^T (A^T A) B, i.e. the spectrum of
/// A^* A restricted to the subspace. Errors on the trivial subspace.
std::pair<double, double> restricted_operator_spectrum(const Mat& A,
                                                       const SubspaceBasis& basis);

/// Largest eigenvalue of A^T A, by power iteration to relative tolerance
/// 1e-10. Throws std::runtime_error if not converged within 10000 iterations.
double largest_singular_value_sq(const Mat& A);

struct ThinSvd {
  Mat U;        // m x r, orthonormal columns
  Vec sigma;    // r, nonincreasing, nonnegative
  Mat V;        // n x r, orthonormal columns
};

/// Reduced SVD X = U diag(sigma) V^T with r = min(rows, cols).
ThinSvd thin_svd(const Mat& X);

}  // namespace fbps
