#include "flcrmf/fpca.hpp"

#include <Eigen/Eigenvalues>
#include <algorithm>
#include <cmath>
#include <string>

#include "flcrmf/error.hpp"

namespace flcrmf {

CovarianceKernel empirical_covariance(const SmoothedCurves& centered, const SamplingGrid& grid) {
  const Eigen::MatrixXd& X = centered.centered;
  if (X.rows() < 2) throw InputError("covariance estimation needs at least 2 curves");
  if (X.cols() != grid.size()) throw InputError("curve length does not match grid");
  const double n = static_cast<double>(X.rows());
  Eigen::MatrixXd G = (X.transpose() * X) / n;
  const Eigen::MatrixXd sym = 0.5 * (G + G.transpose());
  return CovarianceKernel{sym, grid, X.rows()};
}

FpcaBasis eigendecompose(const CovarianceKernel& cov) {
  const Eigen::Index J = cov.grid.size();
  if (cov.matrix.rows() != J || cov.matrix.cols() != J) {
    throw InputError("covariance matrix does not match grid size");
  }
  if (!cov.matrix.allFinite()) throw NumericalError("covariance kernel has non-finite entries");

  const Eigen::ArrayXd sqrt_w = cov.grid.weights().array().sqrt();
  if ((sqrt_w <= 0.0).any()) throw InputError("quadrature weights must be positive for FPCA");
  const Eigen::MatrixXd A =
      sqrt_w.matrix().asDiagonal() * cov.matrix * sqrt_w.matrix().asDiagonal();
  const Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> solver(0.5 * (A + A.transpose()));
  if (solver.info() != Eigen::Success) throw NumericalError("eigendecomposition failed");

  Eigen::Index kmax = std::min<Eigen::Index>(J, kMaxComponentsCap);
  if (cov.sample_size > 0) kmax = std::min(kmax, std::max<Eigen::Index>(cov.sample_size - 1, 1));

  FpcaBasis out;
  out.eigenvalues = solver.eigenvalues().reverse();
  out.eigenfunctions.resize(kmax, J);
  const Eigen::ArrayXd w = cov.grid.weights().array();
  for (Eigen::Index k = 0; k < kmax; ++k) {
    Eigen::ArrayXd phi = solver.eigenvectors().col(J - 1 - k).array() / sqrt_w;
    const double mass = (w * phi).sum();
    const double scale = phi.abs().maxCoeff();
    bool flip = false;
    if (std::abs(mass) > 1e-10 * scale) {
      flip = mass < 0.0;
    } else {
      for (Eigen::Index j = 0; j < J; ++j) {
        if (std::abs(phi(j)) > 1e-12 * scale) {
          flip = phi(j) < 0.0;
          break;
        }
      }
    }
    if (flip) phi = -phi;
    out.eigenfunctions.row(k) = phi.matrix().transpose();
  }
  return out;
}

Eigen::Index select_truncation(const FpcaBasis& basis, double threshold) {
  if (!(threshold > 0.0 && threshold < 1.0)) {
    throw InputError("explained-variance threshold must lie in (0, 1)");
  }
  const Eigen::ArrayXd lambda = basis.eigenvalues.array().max(0.0);
  const double total = lambda.sum();
  if (!(total > 0.0)) throw NumericalError("all eigenvalues are zero: degenerate functional data");
  double cumulative = 0.0;
  Eigen::Index K = lambda.size();
  for (Eigen::Index k = 0; k < lambda.size(); ++k) {
    cumulative += lambda(k);
    if (cumulative >= threshold * total) {
      K = k + 1;
      break;
    }
  }
  return std::clamp<Eigen::Index>(K, 1, std::max<Eigen::Index>(basis.max_components(), 1));
}

FpcaBasis with_truncation(FpcaBasis basis, double threshold) {
  basis.K = select_truncation(basis, threshold);
  basis.threshold = threshold;
  return basis;
}

Eigen::MatrixXd compute_scores(const SmoothedCurves& centered, const FpcaBasis& basis,
                               const SamplingGrid& grid) {
  if (basis.K < 1) throw InputError("FPCA truncation K is not set");
  if (centered.centered.cols() != grid.size()) throw InputError("curve length does not match grid");
  const Eigen::MatrixXd phi = basis.eigenfunctions.topRows(basis.K);
  return centered.centered * grid.weights().asDiagonal() * phi.transpose();
}

}  // namespace flcrmf
