#pragma once

#include <variant>
#include <vector>

#include "fbps/core.hpp"

// The five partly smooth regularizers: l1, group l1-l2, 1D total variation,
// l-infinity and the nuclear norm. Each exposes its value, proximity
// operator, model subspace T_x, generalized sign e_x and smoothness class.

namespace fbps {

enum class RegKind { L1, GroupL1L2, TV1D, LInf, Nuclear };

/// How the active manifold sits in the ambient space. ConstantSign refines
/// LinearSubspace/AffineSubspace: the generalized sign is locally constant
/// along the manifold (the polyhedral cases).
enum class SmoothnessClass {
  GeneralManifold,
  LinearSubspace,
  AffineSubspace,
  LinearSubspaceConstantSign,
};

// Discrete manifold descriptors. Two points lie on the same active manifold
// iff their descriptors are equal; for the nuclear norm the manifold is the
// fixed-rank set, so only the rank participates in the comparison.
struct CoordinateSupport {
  std::vector<int> indices;  // sorted
};
struct BlockSupport {
  std::vector<int> blocks;  // sorted block ids
};
struct TVSupport {
  std::vector<int> jumps;  // sorted indices i with x[i+1] != x[i]
};
struct SaturationSupport {
  std::vector<int> indices;  // sorted saturated coordinates
  std::vector<int> signs;    // +1/-1, aligned with indices
  int n = 0;                 // ambient dimension
};
struct SpectralRank {
  int rank = 0;
};

using ManifoldDescriptor = std::variant<CoordinateSupport, BlockSupport, TVSupport,
                                        SaturationSupport, SpectralRank>;

/// Exact descriptor equality; throws std::invalid_argument on mixed kinds.
bool same_descriptor(const ManifoldDescriptor& a, const ManifoldDescriptor& b);

/// Dimension of the subspace a descriptor realizes (needs the regularizer's
/// shape information, so it lives on Regularizer::subspace_dim below).
struct ModelSubspace {
  ManifoldDescriptor descriptor;
  SubspaceBasis basis;
  // Rank-r singular factors of the point, kept for the nuclear norm only
  // (certificates need the U/V frames); empty otherwise.
  Mat U, V;
};

/// Componentwise soft-thresholding, the l1 prox.
Vec soft_threshold(const Vec& x, double threshold);

/// Euclidean projection onto { z : ||z||_1 <= radius }, by sorting and the
/// exact cumulative-sum threshold. O(n log n).
Vec project_l1_ball(const Vec& x, double radius);

/// Exact prox of t * ||D* z||_1 at x (1D total variation), via the taut
/// string algorithm. O(n).
Vec tv1d_prox(const Vec& x, double t);

class Regularizer {
 public:
  static Regularizer l1(double lambda);
  /// blocks must partition {0, ..., n-1} with no overlap.
  static Regularizer group_l1l2(std::vector<std::vector<int>> blocks, double lambda);
  /// Contiguous blocks of equal size (n must be divisible by block_size).
  static Regularizer group_l1l2_uniform(int n, int block_size, double lambda);
  static Regularizer tv1d(int n, double lambda);
  static Regularizer linf(double lambda);
  /// Points are n1 x n2 matrices flattened column-major into R^(n1*n2).
  static Regularizer nuclear(int n1, int n2, double lambda);

  RegKind kind() const { return kind_; }
  double lambda() const { return lambda_; }
  SmoothnessClass smoothness_class() const;
  int n1() const { return n1_; }
  int n2() const { return n2_; }
  const std::vector<std::vector<int>>& blocks() const { return blocks_; }

  /// lambda * J0(x).
  double value(const Vec& x) const;

  /// argmin_z ||z - x||^2 / (2 gamma) + lambda * J0(z). gamma > 0.
  Vec prox(const Vec& x, double gamma) const;

  /// Default zero_tol (zero_tol < 0) resolves to 1e-8 * (1 + ||x||_inf).
  double resolve_zero_tol(const Vec& x, double zero_tol) const;

  /// Discrete descriptor of the active manifold at x. Cheap (no basis).
  ManifoldDescriptor descriptor(const Vec& x, double zero_tol = -1.0) const;

  /// Descriptor plus a realized orthonormal basis of T_x.
  ModelSubspace model_subspace(const Vec& x, double zero_tol = -1.0) const;

  /// lambda * e_x, an element of T_x.
  Vec generalized_sign(const Vec& x, double zero_tol = -1.0) const;

  /// Dimension of T for a given descriptor.
  Eigen::Index subspace_dim(const ManifoldDescriptor& d) const;

  Eigen::Index ambient_dim() const;

 private:
  Regularizer(RegKind kind, double lambda) : kind_(kind), lambda_(lambda) {}

  RegKind kind_;
  double lambda_;
  int n_ = 0;                             // TV1D ambient dimension
  int n1_ = 0, n2_ = 0;                   // Nuclear shape
  std::vector<std::vector<int>> blocks_;  // GroupL1L2 partition
};

bool same_manifold(const Regularizer& J, const ModelSubspace& a, const ModelSubspace& b);

}  // namespace fbps
