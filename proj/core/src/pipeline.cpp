#include "flcrmf/pipeline.hpp"

#include "flcrmf/error.hpp"

namespace flcrmf {

CoxDesign make_design(const FunctionalSurvivalData& data, Eigen::MatrixXd scores) {
  if (data.n_groups > 0) return CoxDesign(data.records, data.Z, std::move(scores), data.n_groups);
  return CoxDesign(data.records, data.Z, std::move(scores));
}

PipelineResult run_pipeline(const FunctionalSurvivalData& data, const PipelineConfig& config) {
  if (data.curves.values.rows() != data.n()) {
    throw InputError("curve count does not match the number of subjects");
  }
  BSplineBasis basis = build_bspline_basis(data.grid, config.spline_order, config.n_basis);
  SmoothedCurves smoothed = smooth_curves(data.curves, basis, config.ridge);
  FpcaBasis fpca =
      with_truncation(eigendecompose(empirical_covariance(smoothed, data.grid)), config.fpca_threshold);
  fpca.scores = compute_scores(smoothed, fpca, data.grid);
  CoxDesign design = make_design(data, fpca.scores);
  FrailtyFit fitted = fit(design, config.frailty);
  CoefficientFunction beta = reconstruct_beta(fitted.beta_coef_hat, fpca, data.grid);
  return PipelineResult{std::move(basis), std::move(smoothed), std::move(fpca),
                        std::move(design), std::move(fitted), std::move(beta)};
}

Eigen::MatrixXd project_curves(const PipelineResult& fitted, const RawCurves& curves,
                               const PipelineConfig& config) {
  const SmoothedCurves smoothed =
      center_with(smooth_curves(curves, fitted.basis, config.ridge), fitted.smoothed.mean_curve);
  return compute_scores(smoothed, fitted.fpca, fitted.beta_hat.grid);
}

}  // namespace flcrmf
