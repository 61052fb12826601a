#include "flcrmf/grid.hpp"

#include <cmath>
#include <string>

#include "flcrmf/error.hpp"

namespace flcrmf {

namespace {

constexpr Eigen::Index kMinGridPoints = 4;

void check_points(const Eigen::VectorXd& points) {
  if (points.size() < kMinGridPoints) {
    throw InputError("sampling grid needs at least 4 points, got " +
                     std::to_string(points.size()));
  }
  for (Eigen::Index j = 0; j < points.size(); ++j) {
    if (!std::isfinite(points(j))) {
      throw InputError("sampling grid point " + std::to_string(j) + " is not finite");
    }
    if (j > 0 && !(points(j) > points(j - 1))) {
      throw InputError("sampling grid points must be strictly increasing (index " +
                       std::to_string(j) + ")");
    }
  }
}

}  // namespace

SamplingGrid::SamplingGrid(Eigen::VectorXd points, Eigen::VectorXd weights,
                           double lower, double upper)
    : points_(std::move(points)), weights_(std::move(weights)), lower_(lower), upper_(upper) {}

SamplingGrid SamplingGrid::trapezoid(const Eigen::VectorXd& points) {
  check_points(points);
  const Eigen::Index J = points.size();
  Eigen::VectorXd w = Eigen::VectorXd::Zero(J);
  for (Eigen::Index j = 0; j + 1 < J; ++j) {
    const double h = points(j + 1) - points(j);
    w(j) += 0.5 * h;
    w(j + 1) += 0.5 * h;
  }
  return SamplingGrid(points, std::move(w), points(0), points(J - 1));
}

SamplingGrid SamplingGrid::equidistant(double lower, double upper, Eigen::Index count) {
  if (!(upper > lower)) throw InputError("grid interval must have upper > lower");
  if (count < kMinGridPoints) throw InputError("sampling grid needs at least 4 points");
  Eigen::VectorXd pts(count);
  for (Eigen::Index j = 0; j < count; ++j) {
    pts(j) = lower + (upper - lower) * static_cast<double>(j) / static_cast<double>(count - 1);
  }
  pts(count - 1) = upper;
  return trapezoid(pts);
}

SamplingGrid SamplingGrid::with_weights(const Eigen::VectorXd& points,
                                        const Eigen::VectorXd& weights, double lower,
                                        double upper) {
  check_points(points);
  if (weights.size() != points.size()) {
    throw InputError("grid weights and points differ in length");
  }
  if (points(0) < lower || points(points.size() - 1) > upper) {
    throw InputError("grid points fall outside [lower, upper]");
  }
  if ((weights.array() < 0.0).any()) throw InputError("grid weights must be nonnegative");
  const double span = upper - lower;
  if (std::abs(weights.sum() - span) > 1e-12 * span) {
    throw InputError("grid weights must sum to the interval length");
  }
  return SamplingGrid(points, weights, lower, upper);
}

double SamplingGrid::integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const {
  return weights_.dot(values);
}

bool same_grid(const SamplingGrid& a, const SamplingGrid& b) {
  return a.size() == b.size() && a.points() == b.points() && a.weights() == b.weights();
}

}  // namespace flcrmf
