#include "flcrmf/smoothing.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <string>

#include "flcrmf/error.hpp"

namespace flcrmf {

double bspline_value(const Eigen::VectorXd& knots, int order, Eigen::Index index, double x) {
  const Eigen::Index last = knots.size() - 1;
  // Evaluate the order-1 indicators on [t_i, t_{i+1}) and let the final
  // nondegenerate span also own the upper boundary.
  Eigen::VectorXd level(order);
  for (int k = 0; k < order; ++k) {
    const Eigen::Index i = index + k;
    const double lo = knots(i);
    const double hi = knots(i + 1);
    bool inside = lo <= x && x < hi;
    if (!inside && x == knots(last) && hi == knots(last) && lo < hi) inside = true;
    level(k) = inside ? 1.0 : 0.0;
  }
  for (int m = 2; m <= order; ++m) {
    for (int k = 0; k + m <= order; ++k) {
      const Eigen::Index i = index + k;
      double value = 0.0;
      const double left_den = knots(i + m - 1) - knots(i);
      if (left_den > 0.0) value += (x - knots(i)) / left_den * level(k);
      const double right_den = knots(i + m) - knots(i + 1);
      if (right_den > 0.0) value += (knots(i + m) - x) / right_den * level(k + 1);
      level(k) = value;
    }
  }
  return level(0);
}

BSplineBasis build_bspline_basis(const SamplingGrid& grid, int order, Eigen::Index n_basis) {
  if (order < 2) throw InputError("B-spline order must be at least 2");
  if (n_basis < order) {
    throw InputError("n_basis (" + std::to_string(n_basis) + ") < order (" +
                     std::to_string(order) + "): degenerate spline space");
  }
  if (n_basis > grid.size()) {
    throw InputError("n_basis (" + std::to_string(n_basis) + ") exceeds grid size (" +
                     std::to_string(grid.size()) + "): underdetermined least squares");
  }
  const double a = grid.lower();
  const double b = grid.upper();
  const Eigen::Index interior = n_basis - order;
  BSplineBasis basis;
  basis.order = order;
  basis.n_basis = n_basis;
  basis.knots.resize(n_basis + order);
  for (int k = 0; k < order; ++k) {
    basis.knots(k) = a;
    basis.knots(n_basis + k) = b;
  }
  for (Eigen::Index k = 1; k <= interior; ++k) {
    basis.knots(order - 1 + k) =
        a + (b - a) * static_cast<double>(k) / static_cast<double>(interior + 1);
  }
  const Eigen::Index J = grid.size();
  basis.eval.resize(J, n_basis);
  for (Eigen::Index j = 0; j < J; ++j) {
    for (Eigen::Index c = 0; c < n_basis; ++c) {
      basis.eval(j, c) = bspline_value(basis.knots, order, c, grid.points()(j));
    }
  }
  return basis;
}

SmoothedCurves smooth_curves(const RawCurves& raw, const BSplineBasis& basis, double ridge) {
  if (raw.values.cols() != basis.eval.rows()) {
    throw InputError("curve length " + std::to_string(raw.values.cols()) +
                     " does not match grid length " + std::to_string(basis.eval.rows()));
  }
  if (!(ridge >= 0.0) || !std::isfinite(ridge)) throw InputError("ridge must be nonnegative");
  if (!raw.values.allFinite()) throw InputError("raw curves contain non-finite values");

  const Eigen::MatrixXd& E = basis.eval;
  Eigen::MatrixXd normal = E.transpose() * E;
  normal.diagonal().array() += ridge;
  const Eigen::LDLT<Eigen::MatrixXd> ldlt(normal);
  const Eigen::VectorXd d = ldlt.vectorD();
  const double dmax = d.cwiseAbs().maxCoeff();
  if (ldlt.info() != Eigen::Success || d.minCoeff() <= 1e-13 * dmax) {
    throw NumericalError(
        "singular smoothing normal equations: increase ridge or reduce n_basis");
  }
  SmoothedCurves out;
  out.coefficients = ldlt.solve(E.transpose() * raw.values.transpose()).transpose();
  out.fitted = out.coefficients * E.transpose();
  return center_curves(out);
}

SmoothedCurves center_curves(const SmoothedCurves& smoothed) {
  return center_with(smoothed, smoothed.fitted.colwise().mean().transpose());
}

SmoothedCurves center_with(const SmoothedCurves& smoothed, const Eigen::VectorXd& mean_curve) {
  if (mean_curve.size() != smoothed.fitted.cols()) {
    throw InputError("mean curve length does not match curve length");
  }
  SmoothedCurves out = smoothed;
  out.mean_curve = mean_curve;
  out.centered = smoothed.fitted.rowwise() - mean_curve.transpose();
  return out;
}

}  // namespace flcrmf
