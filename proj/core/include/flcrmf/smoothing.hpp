#pragma once

#include <Eigen/Core>

#include "flcrmf/grid.hpp"

namespace flcrmf {

/// B-spline basis with equally spaced interior knots, evaluated on a grid.
struct BSplineBasis {
  int order = 4;              ///< polynomial degree + 1
  Eigen::VectorXd knots;      ///< boundary knots repeated `order` times
  Eigen::Index n_basis = 0;
  Eigen::MatrixXd eval;       ///< J x n_basis, row j = basis values at s_j
};

/// Noisy discretely observed curves, one row per subject.
struct RawCurves {
  Eigen::MatrixXd values;
};

struct SmoothedCurves {
  Eigen::MatrixXd coefficients;  ///< n x B
  Eigen::MatrixXd fitted;        ///< n x J, coefficients * evalᵀ
  Eigen::VectorXd mean_curve;    ///< length J
  Eigen::MatrixXd centered;      ///< fitted - mean_curve (row-wise)
};

inline constexpr int kDefaultSplineOrder = 4;
inline constexpr Eigen::Index kDefaultBasisSize = 20;
inline constexpr double kDefaultRidge = 1e-8;

/// Value of the `index`-th B-spline of the given order at `x` by the
/// Cox–de Boor recursion. The right end of the knot span is closed so the
/// basis still partitions unity at the upper boundary.
double bspline_value(const Eigen::VectorXd& knots, int order, Eigen::Index index, double x);

BSplineBasis build_bspline_basis(const SamplingGrid& grid, int order, Eigen::Index n_basis);

/// Per-curve ridge-stabilized least squares onto the basis, followed by centering.
SmoothedCurves smooth_curves(const RawCurves& raw, const BSplineBasis& basis, double ridge);

/// Recomputes mean_curve as the column mean of `fitted` and subtracts it.
SmoothedCurves center_curves(const SmoothedCurves& smoothed);

/// Centers with an externally supplied mean (e.g. a training mean applied to test curves).
SmoothedCurves center_with(const SmoothedCurves& smoothed, const Eigen::VectorXd& mean_curve);

}  // namespace flcrmf
