#pragma once

#include <string>
#include <vector>

#include "flcrmf/inference.hpp"
#include "flcrmf/pipeline.hpp"
#include "flcrmf/simulation.hpp"
#include "json.hpp"

namespace flcrmf::cli {

using Json = nlohmann::ordered_json;

/// Contents of fit.json.
struct FitReport {
  std::vector<std::string> covariates;
  Eigen::Index K = 0;
  double fpca_threshold = 0.0;
  FrailtyFit fit;
};

Json to_json(const FitReport& report);
/// Inverse of to_json; throws InputError on missing or mistyped fields.
FitReport fit_report_from_json(const Json& doc);
std::string render_fit_json(const FitReport& report);

/// `s,beta` rows.
std::string beta_csv(const CoefficientFunction& beta);
/// `k,lambda,phi_1..phi_J`, one row per retained-or-available eigenfunction.
std::string eigen_csv(const FpcaBasis& basis);

/// Long format `replicate,s,beta_hat`.
std::string bootstrap_long_csv(const BootstrapResult& result);
/// `s,mean,p025,p50,p975`.
std::string bootstrap_summary_csv(const SamplingGrid& grid, const BootstrapSummary& summary);

/// Table-1 columns plus standard errors and convergence counts.
std::string table1_csv(const StudyResult& study);
/// One row per (cell, replicate, method).
std::string replications_csv(const StudyResult& study);

}  // namespace flcrmf::cli
