#include "fbps/core.hpp"

#include <cmath>
#include <random>

namespace fbps {

void ensure_finite(const Vec& v, const char* what) {
  if (!v.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

void ensure_finite(const Mat& m, const char* what) {
  if (!m.allFinite()) throw std::invalid_argument(std::string(what) + ": non-finite entries");
}

SubspaceBasis::SubspaceBasis(Mat basis) : basis_(std::move(basis)) {
  ensure_finite(basis_, "subspace basis");
  if (basis_.cols() > basis_.rows())
    throw std::invalid_argument("subspace basis: more columns than ambient dimension");
  if (basis_.cols() > 0) {
    Mat gram = basis_.transpose() * basis_;
    gram -= Mat::Identity(basis_.cols(), basis_.cols());
    if (gram.cwiseAbs().maxCoeff() > 1e-10)
      throw std::invalid_argument("subspace basis: columns not orthonormal");
  }
}

SubspaceBasis SubspaceBasis::orthonormalize(const Mat& columns) {
  ensure_finite(columns, "subspace basis");
  const Eigen::Index n = columns.rows();
  Mat kept(n, columns.cols());
  Eigen::Index d = 0;
  for (Eigen::Index j = 0; j < columns.cols(); ++j) {
    Vec v = columns.col(j);
    // Two rounds of classical Gram-Schmidt against the kept columns.
    for (int round = 0; round < 2; ++round)
      for (Eigen::Index i = 0; i < d; ++i) v -= kept.col(i).dot(v) * kept.col(i);
    const double nv = v.norm();
    if (nv < 1e-12) continue;
    kept.col(d++) = v / nv;
  }
  return SubspaceBasis(kept.leftCols(d));
}

SubspaceBasis SubspaceBasis::full(Eigen::Index n) {
  return SubspaceBasis(Mat::Identity(n, n));
}

SubspaceBasis SubspaceBasis::empty(Eigen::Index n) { return SubspaceBasis(Mat(n, 0)); }

SubspaceBasis SubspaceBasis::coordinates(Eigen::Index n, const std::vector<int>& idx) {
  Mat B = Mat::Zero(n, static_cast<Eigen::Index>(idx.size()));
  for (size_t j = 0; j < idx.size(); ++j) {
    if (idx[j] < 0 || idx[j] >= n) throw std::invalid_argument("coordinate index out of range");
    B(idx[j], static_cast<Eigen::Index>(j)) = 1.0;
  }
  return SubspaceBasis(std::move(B));
}

Vec project(const SubspaceBasis& basis, const Vec& x) {
  if (x.size() != basis.ambient_dim())
    throw std::invalid_argument("project: dimension mismatch");
  if (basis.dim() == 0) return Vec::Zero(x.size());
  return basis.matrix() * (basis.matrix().transpose() * x);
}

std::pair<double, double> restricted_operator_spectrum(const Mat& A,
                                                       const SubspaceBasis& basis) {
  if (basis.ambient_dim() != A.cols())
    throw std::invalid_argument("restricted_operator_spectrum: dimension mismatch");
  if (basis.dim() == 0)
    throw std::invalid_argument("restricted_operator_spectrum: empty subspace");
  const Mat& B = basis.matrix();
  Mat AB = A * B;
  Mat M = AB.transpose() * AB;  // B^T A^T A B, symmetric PSD
  Eigen::SelfAdjointEigenSolver<Mat> eig(M);
  Vec ev = eig.eigenvalues();
  double lo = std::max(0.0, ev.minCoeff());
  double hi = std::max(0.0, ev.maxCoeff());
  return {lo, hi};
}

double largest_singular_value_sq(const Mat& A) {
  if (A.rows() == 0 || A.cols() == 0)
    throw std::invalid_argument("largest_singular_value_sq: empty matrix");
  // Power iteration on A^T A with a fixed-seed random start.
  std::mt19937_64 rng(0x9e3779b97f4a7c15ull);
  std::uniform_real_distribution<double> unif(-1.0, 1.0);
  Vec v(A.cols());
  for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = unif(rng);
  v.normalize();
  double lambda = 0.0;
  for (int it = 0; it < 10000; ++it) {
    Vec w = A.transpose() * (A * v);
    const double nw = w.norm();
    if (nw == 0.0) return 0.0;  // started in the kernel of a zero map
    w /= nw;
    const double next = w.dot(A.transpose() * (A * w));
    if (it > 0 && std::abs(next - lambda) <= 1e-10 * std::max(1.0, std::abs(next))) {
      return next;
    }
    lambda = next;
    v = w;
  }
  throw std::runtime_error("largest_singular_value_sq: power iteration did not converge");
}

ThinSvd thin_svd(const Mat& X) {
  ensure_finite(X, "thin_svd input");
  Eigen::JacobiSVD<Mat> svd(X, Eigen::ComputeThinU | Eigen::ComputeThinV);
  return {svd.matrixU(), svd.singularValues(), svd.matrixV()};
}

}  // namespace fbps
