#pragma once

#include <Eigen/Core>
#include <vector>

#include "flcrmf/fpca.hpp"
#include "flcrmf/frailty_cox.hpp"
#include "flcrmf/grid.hpp"
#include "flcrmf/inference.hpp"
#include "flcrmf/smoothing.hpp"

namespace flcrmf {

/// Everything needed to fit the functional Cox model with frailty: noisy
/// curves on a common grid, survival outcomes and scalar covariates.
struct FunctionalSurvivalData {
  SamplingGrid grid;
  RawCurves curves;
  std::vector<SurvivalRecord> records;
  Eigen::MatrixXd Z;
  /// 0 means unshared frailty (one group per subject); otherwise the number
  /// of groups referenced by records[i].group.
  Eigen::Index n_groups = 0;

  Eigen::Index n() const { return static_cast<Eigen::Index>(records.size()); }
};

struct PipelineConfig {
  int spline_order = kDefaultSplineOrder;
  Eigen::Index n_basis = kDefaultBasisSize;
  double ridge = kDefaultRidge;
  double fpca_threshold = kDefaultFpcaThreshold;
  FrailtyConfig frailty;
};

struct PipelineResult {
  BSplineBasis basis;
  SmoothedCurves smoothed;
  FpcaBasis fpca;
  CoxDesign design;
  FrailtyFit fit;
  CoefficientFunction beta_hat;
};

/// smooth → center → FPCA → truncate → scores → fit → reconstruct β̂(s).
PipelineResult run_pipeline(const FunctionalSurvivalData& data, const PipelineConfig& config);

/// FPC scores of new curves under a fitted pipeline (training mean and
/// eigenfunctions).
Eigen::MatrixXd project_curves(const PipelineResult& fitted, const RawCurves& curves,
                               const PipelineConfig& config);

/// Builds the Cox design for `data` with the given score matrix.
CoxDesign make_design(const FunctionalSurvivalData& data, Eigen::MatrixXd scores);

}  // namespace flcrmf
