#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <functional>
#include <vector>

#include "flcrmf/fpca.hpp"
#include "flcrmf/frailty_cox.hpp"
#include "flcrmf/grid.hpp"
#include "flcrmf/rng.hpp"

namespace flcrmf {

struct FunctionalSurvivalData;
struct PipelineConfig;

/// β̂(s) on the FPCA grid.
struct CoefficientFunction {
  SamplingGrid grid;
  Eigen::VectorXd values;
};

struct MetricsRecord {
  double ci_in = 0.0;
  double ci_out = 0.0;
  double mse_gamma = 0.0;
  double imse_beta = 0.0;
  double censor_rate = 0.0;
};

/// β̂(s_j) = Σ_k β̂_k φ_k(s_j); requires beta_coef.size() == basis.K.
CoefficientFunction reconstruct_beta(const Eigen::VectorXd& beta_coef, const FpcaBasis& basis,
                                     const SamplingGrid& grid);

double mse_gamma(const Eigen::VectorXd& gamma_hat, const Eigen::VectorXd& gamma_true);

/// ∫ (β̂ - β)² ds by the grid's quadrature.
double imse_beta(const CoefficientFunction& beta_hat, const Eigen::VectorXd& beta_true_on_grid);

struct ConcordanceCounts {
  std::int64_t concordant = 0;
  std::int64_t tied_risk = 0;
  std::int64_t comparable = 0;

  double index() const;
};

/// Harrell's C. A pair is comparable when the subject with the strictly
/// smaller observed time had an event; it is concordant when that subject
/// has the strictly higher risk and counts one half on tied risks. Pairs
/// with equal observed times are never comparable.
ConcordanceCounts concordance_counts(const std::vector<SurvivalRecord>& records,
                                     const Eigen::VectorXd& risk);
double concordance(const std::vector<SurvivalRecord>& records, const Eigen::VectorXd& risk);

/// Draws the row indices of one bootstrap resample of size n.
using Resampler = std::function<std::vector<Eigen::Index>(Eigen::Index n, CounterRng& rng)>;

std::vector<Eigen::Index> resample_with_replacement(Eigen::Index n, CounterRng& rng);
std::vector<Eigen::Index> identity_resample(Eigen::Index n, CounterRng& rng);

struct BootstrapOptions {
  int replicates = 500;
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  Resampler resampler = resample_with_replacement;
};

struct BootstrapResult {
  std::vector<int> replicate_ids;            ///< ids of the retained replicates
  std::vector<CoefficientFunction> curves;   ///< one β̂ per retained replicate
  Eigen::VectorXd pointwise_mean;
  int skipped = 0;                           ///< resamples without events or with failed fits
};

/// Reruns the whole pipeline on B resamples drawn with replacement.
/// Replicate b uses the substream (seed, b).
BootstrapResult bootstrap_beta(const FunctionalSurvivalData& data, const PipelineConfig& config,
                               const BootstrapOptions& options);

struct BootstrapSummary {
  Eigen::VectorXd mean;
  Eigen::VectorXd p025;
  Eigen::VectorXd p50;
  Eigen::VectorXd p975;
  Eigen::VectorXd variance;
};

BootstrapSummary summarize_bootstrap(const BootstrapResult& result);

/// Linear-interpolation sample quantile (R type 7) of unsorted values.
double quantile(std::vector<double> values, double prob);

}  // namespace flcrmf
