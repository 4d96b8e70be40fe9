#include "fbps/regularizers.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace fbps {

namespace {

Eigen::Map<const Mat> as_matrix(const Vec& x, int n1, int n2) {
  if (x.size() != static_cast<Eigen::Index>(n1) * n2)
    throw std::invalid_argument("nuclear point: size != n1*n2");
  return Eigen::Map<const Mat>(x.data(), n1, n2);
}

Vec flatten(const Mat& X) { return Eigen::Map<const Vec>(X.data(), X.size()); }

/// Orthonormal basis of the orthogonal complement of col(U) in R^n.
Mat orthonormal_complement(const Mat& U) {
  const Eigen::Index n = U.rows(), r = U.cols();
  Eigen::HouseholderQR<Mat> qr(U);
  Mat Q = qr.householderQ() * Mat::Identity(n, n);
  return Q.rightCols(n - r);
}

struct DescriptorEq {
  bool operator()(const CoordinateSupport& a, const CoordinateSupport& b) const {
    return a.indices == b.indices;
  }
  bool operator()(const BlockSupport& a, const BlockSupport& b) const {
    return a.blocks == b.blocks;
  }
  bool operator()(const TVSupport& a, const TVSupport& b) const { return a.jumps == b.jumps; }
  bool operator()(const SaturationSupport& a, const SaturationSupport& b) const {
    return a.n == b.n && a.indices == b.indices && a.signs == b.signs;
  }
  bool operator()(const SpectralRank& a, const SpectralRank& b) const {
    return a.rank == b.rank;
  }
  template <class A, class B>
  bool operator()(const A&, const B&) const {
    throw std::invalid_argument("same_descriptor: mixed descriptor kinds");
  }
};

}  // namespace

bool same_descriptor(const ManifoldDescriptor& a, const ManifoldDescriptor& b) {
  return std::visit(DescriptorEq{}, a, b);
}

Vec soft_threshold(const Vec& x, double threshold) {
  Vec z = x;
  for (Eigen::Index i = 0; i < z.size(); ++i) {
    const double a = std::abs(z[i]) - threshold;
    z[i] = a > 0.0 ? (z[i] > 0.0 ? a : -a) : 0.0;
  }
  return z;
}

Vec project_l1_ball(const Vec& x, double radius) {
  if (radius <= 0.0) throw std::invalid_argument("project_l1_ball: radius must be positive");
  if (x.lpNorm<1>() <= radius) return x;
  std::vector<double> a(static_cast<size_t>(x.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) a[static_cast<size_t>(i)] = std::abs(x[i]);
  std::sort(a.begin(), a.end(), std::greater<double>());
  double cum = 0.0, tau = 0.0;
  for (size_t k = 0; k < a.size(); ++k) {
    cum += a[k];
    const double t = (cum - radius) / static_cast<double>(k + 1);
    if (t < a[k]) tau = t;  // last k with a_k > (cum_k - r)/k wins
  }
  return soft_threshold(x, tau);
}

// Taut string / direct 1D TV prox (exact, O(n) in practice). The running
// tube [vmin - t, vmax + t] is tracked together with the accumulated slacks
// umin/umax; a wall hit forces a jump and restarts the segment. Exact knot
// touches resolve toward the lower string (strict < / > in the jump tests).
Vec tv1d_prox(const Vec& x, double t) {
  const Eigen::Index n = x.size();
  if (t < 0.0) throw std::invalid_argument("tv1d_prox: negative threshold");
  if (n <= 1 || t == 0.0) return x;

  Vec out(n);
  Eigen::Index k = 0, k0 = 0, km = 0, kp = 0;
  double vmin = x[0] - t, vmax = x[0] + t;
  double umin = t, umax = -t;
  for (;;) {
    while (k == n - 1) {
      if (umin < 0.0) {  // lower string must jump down at km
        do out[k0++] = vmin;
        while (k0 <= km);
        km = k = k0;
        vmin = x[k];
        umin = t;
        umax = vmin + t - vmax;
      } else if (umax > 0.0) {  // upper string must jump up at kp
        do out[k0++] = vmax;
        while (k0 <= kp);
        kp = k = k0;
        vmax = x[k];
        umax = -t;
        umin = vmax - t - vmin;
      } else {  // tube closed: flush the final segment
        vmin += umin / static_cast<double>(k - k0 + 1);
        do out[k0++] = vmin;
        while (k0 <= k);
        return out;
      }
    }
    if (x[k + 1] + umin < vmin - t) {  // negative jump necessary
      do out[k0++] = vmin;
      while (k0 <= km);
      km = kp = k = k0;
      vmin = x[k];
      vmax = vmin + 2.0 * t;
      umin = t;
      umax = -t;
    } else if (x[k + 1] + umax > vmax + t) {  // positive jump necessary
      do out[k0++] = vmax;
      while (k0 <= kp);
      km = kp = k = k0;
      vmax = x[k];
      vmin = vmax - 2.0 * t;
      umin = t;
      umax = -t;
    } else {  // no jump: extend the segment
      ++k;
      umin += x[k] - vmin;
      umax += x[k] - vmax;
      if (umin >= t) {
        vmin += (umin - t) / static_cast<double>(k - k0 + 1);
        umin = t;
        km = k;
      }
      if (umax <= -t) {
        vmax += (umax + t) / static_cast<double>(k - k0 + 1);
        umax = -t;
        kp = k;
      }
    }
  }
}

Regularizer Regularizer::l1(double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("regularizer weight must be positive");
  return Regularizer(RegKind::L1, lambda);
}

Regularizer Regularizer::group_l1l2(std::vector<std::vector<int>> blocks, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("regularizer weight must be positive");
  Regularizer J(RegKind::GroupL1L2, lambda);
  size_t total = 0;
  for (const auto& b : blocks) total += b.size();
  std::vector<char> seen(total, 0);
  for (const auto& b : blocks) {
    if (b.empty()) throw std::invalid_argument("group_l1l2: empty block");
    for (int i : b) {
      if (i < 0 || static_cast<size_t>(i) >= total || seen[static_cast<size_t>(i)])
        throw std::invalid_argument("group_l1l2: blocks must partition {0..n-1}");
      seen[static_cast<size_t>(i)] = 1;
    }
  }
  J.blocks_ = std::move(blocks);
  J.n_ = static_cast<int>(total);
  return J;
}

Regularizer Regularizer::group_l1l2_uniform(int n, int block_size, double lambda) {
  if (block_size <= 0 || n % block_size != 0)
    throw std::invalid_argument("group_l1l2_uniform: n must be a multiple of block_size");
  std::vector<std::vector<int>> blocks;
  for (int s = 0; s < n; s += block_size) {
    std::vector<int> b(static_cast<size_t>(block_size));
    std::iota(b.begin(), b.end(), s);
    blocks.push_back(std::move(b));
  }
  return group_l1l2(std::move(blocks), lambda);
}

Regularizer Regularizer::tv1d(int n, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("regularizer weight must be positive");
  if (n < 2) throw std::invalid_argument("tv1d: dimension must be at least 2");
  Regularizer J(RegKind::TV1D, lambda);
  J.n_ = n;
  return J;
}

Regularizer Regularizer::linf(double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("regularizer weight must be positive");
  return Regularizer(RegKind::LInf, lambda);
}

Regularizer Regularizer::nuclear(int n1, int n2, double lambda) {
  if (lambda <= 0.0) throw std::invalid_argument("regularizer weight must be positive");
  if (n1 < 1 || n2 < 1) throw std::invalid_argument("nuclear: dimensions must be positive");
  Regularizer J(RegKind::Nuclear, lambda);
  J.n1_ = n1;
  J.n2_ = n2;
  return J;
}

SmoothnessClass Regularizer::smoothness_class() const {
  switch (kind_) {
    case RegKind::L1:
    case RegKind::TV1D:
    case RegKind::LInf:
      return SmoothnessClass::LinearSubspaceConstantSign;
    case RegKind::GroupL1L2:
      return SmoothnessClass::LinearSubspace;
    case RegKind::Nuclear:
      return SmoothnessClass::GeneralManifold;
  }
  throw std::logic_error("unreachable");
}

Eigen::Index Regularizer::ambient_dim() const {
  switch (kind_) {
    case RegKind::GroupL1L2:
    case RegKind::TV1D:
      return n_;
    case RegKind::Nuclear:
      return static_cast<Eigen::Index>(n1_) * n2_;
    default:
      return 0;  // any dimension
  }
}

static void check_dim(const Regularizer& J, const Vec& x) {
  const Eigen::Index want = J.ambient_dim();
  if (want > 0 && x.size() != want)
    throw std::invalid_argument("regularizer: point has wrong dimension");
  if (x.size() == 0) throw std::invalid_argument("regularizer: empty point");
}

double Regularizer::value(const Vec& x) const {
  check_dim(*this, x);
  switch (kind_) {
    case RegKind::L1:
      return lambda_ * x.lpNorm<1>();
    case RegKind::GroupL1L2: {
      double s = 0.0;
      for (const auto& b : blocks_) {
        double nb = 0.0;
        for (int i : b) nb += x[i] * x[i];
        s += std::sqrt(nb);
      }
      return lambda_ * s;
    }
    case RegKind::TV1D: {
      double s = 0.0;
      for (Eigen::Index i = 0; i + 1 < x.size(); ++i) s += std::abs(x[i + 1] - x[i]);
      return lambda_ * s;
    }
    case RegKind::LInf:
      return lambda_ * x.lpNorm<Eigen::Infinity>();
    case RegKind::Nuclear:
      return lambda_ * thin_svd(as_matrix(x, n1_, n2_)).sigma.sum();
  }
  throw std::logic_error("unreachable");
}

Vec Regularizer::prox(const Vec& x, double gamma) const {
  check_dim(*this, x);
  if (gamma <= 0.0) throw std::invalid_argument("prox: gamma must be positive");
  const double t = gamma * lambda_;
  switch (kind_) {
    case RegKind::L1:
      return soft_threshold(x, t);
    case RegKind::GroupL1L2: {
      Vec z = x;
      for (const auto& b : blocks_) {
        double nb = 0.0;
        for (int i : b) nb += x[i] * x[i];
        nb = std::sqrt(nb);
        const double shrink = nb > t ? 1.0 - t / nb : 0.0;
        for (int i : b) z[i] = shrink * x[i];
      }
      return z;
    }
    case RegKind::TV1D:
      return tv1d_prox(x, t);
    case RegKind::LInf:
      // Moreau decomposition: the dual-norm ball of l_inf is the l1 ball.
      if (x.lpNorm<1>() <= t) return Vec::Zero(x.size());
      return x - project_l1_ball(x, t);
    case RegKind::Nuclear: {
      ThinSvd svd = thin_svd(as_matrix(x, n1_, n2_));
      Vec s = soft_threshold(svd.sigma, t);
      return flatten(Mat(svd.U * s.asDiagonal() * svd.V.transpose()));
    }
  }
  throw std::logic_error("unreachable");
}

double Regularizer::resolve_zero_tol(const Vec& x, double zero_tol) const {
  if (zero_tol >= 0.0) return zero_tol;
  return 1e-8 * (1.0 + x.lpNorm<Eigen::Infinity>());
}

ManifoldDescriptor Regularizer::descriptor(const Vec& x, double zero_tol) const {
  check_dim(*this, x);
  const double tol = resolve_zero_tol(x, zero_tol);
  switch (kind_) {
    case RegKind::L1: {
      CoordinateSupport d;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) > tol) d.indices.push_back(static_cast<int>(i));
      return d;
    }
    case RegKind::GroupL1L2: {
      BlockSupport d;
      for (size_t b = 0; b < blocks_.size(); ++b) {
        double nb = 0.0;
        for (int i : blocks_[b]) nb = std::max(nb, std::abs(x[i]));
        if (nb > tol) d.blocks.push_back(static_cast<int>(b));
      }
      return d;
    }
    case RegKind::TV1D: {
      TVSupport d;
      for (Eigen::Index i = 0; i + 1 < x.size(); ++i)
        if (std::abs(x[i + 1] - x[i]) > tol) d.jumps.push_back(static_cast<int>(i));
      return d;
    }
    case RegKind::LInf: {
      const double m = x.lpNorm<Eigen::Infinity>();
      if (m <= tol)
        throw std::invalid_argument("linf: model subspace undefined at x = 0");
      SaturationSupport d;
      d.n = static_cast<int>(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i) {
        if (std::abs(x[i]) >= m - tol) {
          d.indices.push_back(static_cast<int>(i));
          d.signs.push_back(x[i] > 0.0 ? 1 : -1);
        }
      }
      return d;
    }
    case RegKind::Nuclear: {
      Vec s = thin_svd(as_matrix(x, n1_, n2_)).sigma;
      int r = 0;
      for (Eigen::Index i = 0; i < s.size(); ++i)
        if (s[i] > tol) ++r;
      return SpectralRank{r};
    }
  }
  throw std::logic_error("unreachable");
}

Eigen::Index Regularizer::subspace_dim(const ManifoldDescriptor& d) const {
  switch (kind_) {
    case RegKind::L1:
      return static_cast<Eigen::Index>(std::get<CoordinateSupport>(d).indices.size());
    case RegKind::GroupL1L2: {
      Eigen::Index dim = 0;
      for (int b : std::get<BlockSupport>(d).blocks)
        dim += static_cast<Eigen::Index>(blocks_[static_cast<size_t>(b)].size());
      return dim;
    }
    case RegKind::TV1D:
      // one degree of freedom per constant run
      return static_cast<Eigen::Index>(std::get<TVSupport>(d).jumps.size()) + 1;
    case RegKind::LInf: {
      const auto& s = std::get<SaturationSupport>(d);
      // the saturated face collapses to one shared magnitude
      return s.n - static_cast<Eigen::Index>(s.indices.size()) + 1;
    }
    case RegKind::Nuclear: {
      const Eigen::Index r = std::get<SpectralRank>(d).rank;
      return r * (n1_ + n2_ - r);
    }
  }
  throw std::logic_error("unreachable");
}

ModelSubspace Regularizer::model_subspace(const Vec& x, double zero_tol) const {
  ManifoldDescriptor d = descriptor(x, zero_tol);
  const Eigen::Index n = x.size();
  switch (kind_) {
    case RegKind::L1:
      return {d, SubspaceBasis::coordinates(n, std::get<CoordinateSupport>(d).indices),
              Mat(), Mat()};
    case RegKind::GroupL1L2: {
      std::vector<int> idx;
      for (int b : std::get<BlockSupport>(d).blocks)
        for (int i : blocks_[static_cast<size_t>(b)]) idx.push_back(i);
      std::sort(idx.begin(), idx.end());
      return {d, SubspaceBasis::coordinates(n, idx), Mat(), Mat()};
    }
    case RegKind::TV1D: {
      // T = { u : supp(D*u) subset of the jump set } = piecewise-constant
      // vectors on the runs of x; basis = normalized run indicators.
      const auto& jumps = std::get<TVSupport>(d).jumps;
      Mat B = Mat::Zero(n, static_cast<Eigen::Index>(jumps.size()) + 1);
      Eigen::Index col = 0, start = 0;
      for (size_t j = 0; j <= jumps.size(); ++j, ++col) {
        const Eigen::Index end = j < jumps.size() ? jumps[j] + 1 : n;  // exclusive
        const double len = static_cast<double>(end - start);
        for (Eigen::Index i = start; i < end; ++i) B(i, col) = 1.0 / std::sqrt(len);
        start = end;
      }
      return {d, SubspaceBasis(std::move(B)), Mat(), Mat()};
    }
    case RegKind::LInf: {
      // T = { a : a_I = r s_I } + free off-saturation coordinates.
      const auto& sat = std::get<SaturationSupport>(d);
      const Eigen::Index nsat = static_cast<Eigen::Index>(sat.indices.size());
      Mat B = Mat::Zero(n, n - nsat + 1);
      const double inv = 1.0 / std::sqrt(static_cast<double>(nsat));
      for (Eigen::Index j = 0; j < nsat; ++j)
        B(sat.indices[static_cast<size_t>(j)], 0) = sat.signs[static_cast<size_t>(j)] * inv;
      Eigen::Index col = 1;
      std::vector<char> is_sat(static_cast<size_t>(n), 0);
      for (int i : sat.indices) is_sat[static_cast<size_t>(i)] = 1;
      for (Eigen::Index i = 0; i < n; ++i)
        if (!is_sat[static_cast<size_t>(i)]) B(i, col++) = 1.0;
      return {d, SubspaceBasis(std::move(B)), Mat(), Mat()};
    }
    case RegKind::Nuclear: {
      const double tol = resolve_zero_tol(x, zero_tol);
      ThinSvd svd = thin_svd(as_matrix(x, n1_, n2_));
      const int r = std::get<SpectralRank>(d).rank;
      Mat U = svd.U.leftCols(r), V = svd.V.leftCols(r);
      Mat Uc = orthonormal_complement(U), Vc = orthonormal_complement(V);
      (void)tol;
      // Tangent of the fixed-rank manifold: { U L^T + M V^T }. Orthonormal
      // basis under the Frobenius inner product: vec(u_i v_j^T) for the
      // r x r block, plus the mixed blocks with the complements.
      Mat B(static_cast<Eigen::Index>(n1_) * n2_, subspace_dim(d));
      Eigen::Index col = 0;
      for (int j = 0; j < r; ++j)
        for (int i = 0; i < r; ++i)
          B.col(col++) = flatten(Mat(U.col(i) * V.col(j).transpose()));
      for (Eigen::Index j = 0; j < Vc.cols(); ++j)
        for (int i = 0; i < r; ++i)
          B.col(col++) = flatten(Mat(U.col(i) * Vc.col(j).transpose()));
      for (int j = 0; j < r; ++j)
        for (Eigen::Index i = 0; i < Uc.cols(); ++i)
          B.col(col++) = flatten(Mat(Uc.col(i) * V.col(j).transpose()));
      return {d, SubspaceBasis(std::move(B)), std::move(U), std::move(V)};
    }
  }
  throw std::logic_error("unreachable");
}

Vec Regularizer::generalized_sign(const Vec& x, double zero_tol) const {
  check_dim(*this, x);
  const double tol = resolve_zero_tol(x, zero_tol);
  switch (kind_) {
    case RegKind::L1: {
      Vec e = Vec::Zero(x.size());
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) > tol) e[i] = x[i] > 0.0 ? lambda_ : -lambda_;
      return e;
    }
    case RegKind::GroupL1L2: {
      Vec e = Vec::Zero(x.size());
      for (const auto& b : blocks_) {
        double nb = 0.0, mx = 0.0;
        for (int i : b) {
          nb += x[i] * x[i];
          mx = std::max(mx, std::abs(x[i]));
        }
        if (mx <= tol) continue;  // N(0) = 0
        nb = std::sqrt(nb);
        for (int i : b) e[i] = lambda_ * x[i] / nb;
      }
      return e;
    }
    case RegKind::TV1D: {
      // e = lambda * proj_T (D sign(D* x))
      ModelSubspace T = model_subspace(x, zero_tol);
      const Eigen::Index n = x.size();
      Vec d = Vec::Zero(n);
      for (Eigen::Index i = 0; i + 1 < n; ++i) {
        const double diff = x[i + 1] - x[i];
        if (std::abs(diff) > tol) {
          const double s = diff > 0.0 ? 1.0 : -1.0;
          d[i + 1] += s;  // D column i is e_{i+1} - e_i
          d[i] -= s;
        }
      }
      return lambda_ * project(T.basis, d);
    }
    case RegKind::LInf: {
      const double m = x.lpNorm<Eigen::Infinity>();
      if (m <= tol)
        throw std::invalid_argument("linf: generalized sign undefined at x = 0");
      Vec e = Vec::Zero(x.size());
      int nsat = 0;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) >= m - tol) ++nsat;
      for (Eigen::Index i = 0; i < x.size(); ++i)
        if (std::abs(x[i]) >= m - tol)
          e[i] = lambda_ * (x[i] > 0.0 ? 1.0 : -1.0) / static_cast<double>(nsat);
      return e;
    }
    case RegKind::Nuclear: {
      ThinSvd svd = thin_svd(as_matrix(x, n1_, n2_));
      int r = 0;
      for (Eigen::Index i = 0; i < svd.sigma.size(); ++i)
        if (svd.sigma[i] > tol) ++r;
      Mat UV = svd.U.leftCols(r) * svd.V.leftCols(r).transpose();
      return lambda_ * flatten(UV);
    }
  }
  throw std::logic_error("unreachable");
}

bool same_manifold(const Regularizer& J, const ModelSubspace& a, const ModelSubspace& b) {
  (void)J;
  return same_descriptor(a.descriptor, b.descriptor);
}

}  // namespace fbps
