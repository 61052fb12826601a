#pragma once

#include <Eigen/Core>

#include "flcrmf/grid.hpp"
#include "flcrmf/smoothing.hpp"

namespace flcrmf {

/// Discretized covariance kernel G(s_j, s_l) on a sampling grid.
struct CovarianceKernel {
  Eigen::MatrixXd matrix;
  SamplingGrid grid;
  /// Number of curves the kernel was estimated from; 0 when unknown.
  Eigen::Index sample_size = 0;
};

/// Functional principal components in the L² inner product induced by the
/// grid's quadrature weights.
///
/// `eigenvalues` holds the whole spectrum (descending); `eigenfunctions`
/// holds the leading `max_components()` eigenfunctions as rows. The
/// truncation `K` is 0 until select_truncation has been applied.
///
/// Near-degenerate eigenvalues make individual eigenfunctions unstable
/// while the subspace they span stays stable; β̂(s) depends only on that
/// subspace once all members of a near-tie are retained.
struct FpcaBasis {
  Eigen::VectorXd eigenvalues;
  Eigen::MatrixXd eigenfunctions;  ///< K_max x J
  Eigen::Index K = 0;
  double threshold = 0.0;
  Eigen::MatrixXd scores;          ///< n x K, filled by compute_scores

  Eigen::Index max_components() const { return eigenfunctions.rows(); }
};

inline constexpr double kDefaultFpcaThreshold = 0.85;
inline constexpr Eigen::Index kMaxComponentsCap = 35;

CovarianceKernel empirical_covariance(const SmoothedCurves& centered, const SamplingGrid& grid);

/// All eigenpairs of the weighted problem, sorted descending, with the sign
/// convention ∫φ_k ≥ 0 (ties broken by first nonzero coordinate > 0).
/// Keeps min(sample_size - 1, J, 35) eigenfunctions, or min(J, 35) when the
/// sample size is unknown.
FpcaBasis eigendecompose(const CovarianceKernel& cov);

/// Smallest K whose cumulative eigenvalue share reaches `threshold`.
Eigen::Index select_truncation(const FpcaBasis& basis, double threshold);

/// Returns a copy of `basis` with K and threshold set.
FpcaBasis with_truncation(FpcaBasis basis, double threshold);

/// ξ_ik = Σ_j w_j X_i(s_j) φ_k(s_j) for the first K components.
Eigen::MatrixXd compute_scores(const SmoothedCurves& centered, const FpcaBasis& basis,
                               const SamplingGrid& grid);

}  // namespace flcrmf
