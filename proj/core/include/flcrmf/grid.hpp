#pragma once

#include <Eigen/Core>

namespace flcrmf {

/// Ordered abscissae on a closed interval [lower, upper] together with
/// quadrature weights. Every integral over the functional domain in this
/// library is the weighted sum Σ_j weights(j)·f(s_j).
class SamplingGrid {
 public:
  /// Trapezoid weights on the given strictly increasing points; the interval
  /// is [points.front(), points.back()].
  static SamplingGrid trapezoid(const Eigen::VectorXd& points);

  /// `count` equidistant points on [lower, upper] with trapezoid weights.
  static SamplingGrid equidistant(double lower, double upper, Eigen::Index count);

  /// Explicit weights; they must be nonnegative and sum to upper - lower.
  static SamplingGrid with_weights(const Eigen::VectorXd& points,
                                   const Eigen::VectorXd& weights, double lower,
                                   double upper);

  const Eigen::VectorXd& points() const { return points_; }
  const Eigen::VectorXd& weights() const { return weights_; }
  Eigen::Index size() const { return points_.size(); }
  double lower() const { return lower_; }
  double upper() const { return upper_; }

  /// Σ_j w_j f_j
  double integrate(const Eigen::Ref<const Eigen::VectorXd>& values) const;

 private:
  SamplingGrid(Eigen::VectorXd points, Eigen::VectorXd weights, double lower,
               double upper);

  Eigen::VectorXd points_;
  Eigen::VectorXd weights_;
  double lower_ = 0.0;
  double upper_ = 0.0;
};

bool same_grid(const SamplingGrid& a, const SamplingGrid& b);

}  // namespace flcrmf
