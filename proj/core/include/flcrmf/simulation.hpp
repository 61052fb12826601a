#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "flcrmf/frailty_cox.hpp"
#include "flcrmf/grid.hpp"
#include "flcrmf/inference.hpp"
#include "flcrmf/pipeline.hpp"
#include "flcrmf/rng.hpp"

namespace flcrmf {

/// How a gamma frailty draw w enters the hazard of the generator.
enum class FrailtyScale {
  /// h(t) = h₀(t)·w·exp(η), i.e. log w is added to the linear predictor.
  kMultiplicative,
  /// h(t) = h₀(t)·exp(η + w): the draw itself sits in the exponent.
  kExponent,
};

/// One cell of the Monte Carlo study.
struct SimConfig {
  Eigen::Index n = 250;
  double tau = 0.01;
  double phi = 0.01;
  double rho = 0.5;
  Eigen::Index J = 101;
  Eigen::Index n_test = 0;  ///< 0 means n_test = n
  int replications = 100;
  std::uint64_t seed = 1;
  double fpca_threshold = kDefaultFpcaThreshold;
  FrailtyScale frailty_scale = FrailtyScale::kMultiplicative;
  /// Generate event times from the noisy curves instead of the noise-free ones.
  bool noisy_linear_predictor = false;
  /// Also fit the model without frailty on every replicate.
  bool compare_no_frailty = true;
  PipelineConfig pipeline;

  Eigen::Index test_size() const { return n_test > 0 ? n_test : n; }
  void validate() const;
};

struct TruthSpec {
  Eigen::VectorXd gamma_true = Eigen::VectorXd::Constant(6, 0.5);

  /// β(s) of the study design.
  static double beta(double s);
};

/// 0.3·(2π)^{-1/2}·exp(-(s - 0.5)²/2), the Gaussian bump inside β(s).
double gaussian_bump_term(double s);

Eigen::VectorXd beta_true_eval(const SamplingGrid& grid);

struct FunctionalDraw {
  Eigen::MatrixXd true_curves;
  Eigen::MatrixXd noisy_curves;
  Eigen::VectorXd v11;  ///< sine coefficient of the first frequency, per subject
};

/// X̃_i(s) = u₁ + u₂s + Σ_{j≤10} v_{j1} sin(2(2j-1)πs) + v_{j2} cos(2(2j-1)πs),
/// u ~ N(0,1), v_{j·} ~ N(0, j²); the noisy copy adds N(0, 0.5) per grid point.
FunctionalDraw gen_functional_predictor(Eigen::Index n, const SamplingGrid& grid, CounterRng& rng);

/// n x 6 covariates, jointly Gaussian with v11: Cov(Z) = (ρ^{|j-k|}),
/// Cov(z_k, v11) = 0.1. Drawn conditionally on the realized v11.
Eigen::MatrixXd gen_scalar_covariates(Eigen::Index n, double rho, const Eigen::VectorXd& v11,
                                      CounterRng& rng);

/// i.i.d. Gamma(shape 1/φ, scale φ).
Eigen::VectorXd gen_frailty(Eigen::Index n, double phi, CounterRng& rng);

/// Exponential event times with rate exp(Zγ + ∫Xβ) combined with the frailty
/// according to `scale`, exponential(τ) censoring (τ = 0: none), group_i = i.
std::vector<SurvivalRecord> gen_survival(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& curves,
                                         const Eigen::VectorXd& w,
                                         const Eigen::VectorXd& beta_on_grid,
                                         const Eigen::VectorXd& gamma_true, double tau,
                                         const SamplingGrid& grid, CounterRng& rng,
                                         FrailtyScale scale = FrailtyScale::kMultiplicative);

struct SimulatedDataset {
  FunctionalSurvivalData data;
  Eigen::MatrixXd true_curves;
  Eigen::VectorXd frailty;
};

SimulatedDataset simulate_dataset(Eigen::Index n, const SimConfig& config, const TruthSpec& truth,
                                  CounterRng& rng);

/// Observed censoring fraction 1 - mean(δ).
double censoring_rate(const std::vector<SurvivalRecord>& records);

struct ReplicationRecord {
  int replicate = 0;
  std::uint64_t stream_key = 0;
  bool failed = false;
  std::string failure;
  Eigen::Index K_selected = 0;
  MetricsRecord frailty;
  bool frailty_converged = false;
  double alpha_hat = 0.0;
  int outer_iterations = 0;
  int max_inner_iterations = 0;
  std::optional<MetricsRecord> no_frailty;
  bool no_frailty_converged = false;
};

/// Train + test generation, smoothing, FPCA, frailty fit and metrics.
ReplicationRecord run_replication(const SimConfig& config, const TruthSpec& truth, CounterRng& rng);

/// Substream used for replicate `rep` of a cell; depends only on
/// (seed, n, τ, φ, rep) so a cell reproduces identically inside any grid.
CounterRng replication_stream(const SimConfig& config, int rep);

struct CellSummary {
  double tau = 0.0;
  double phi = 0.0;
  Eigen::Index n = 0;
  std::string method;  ///< "FLCRM-F" or "FLCRM"
  int replications = 0;
  int converged = 0;
  MetricsRecord mean;
  MetricsRecord se;
};

struct StudyCell {
  SimConfig config;
  std::vector<ReplicationRecord> replicates;
};

struct StudyResult {
  std::vector<StudyCell> cells;
  std::vector<CellSummary> table;
};

struct StudyGrid {
  std::vector<Eigen::Index> n;
  std::vector<double> tau;
  std::vector<double> phi;
};

/// Table-1 settings restricted to desk scale: n ∈ {100, 250}, τ ∈ {0.01, 0.1, 0.2},
/// φ ∈ {0.01, 1, 1.5, 2}.
StudyGrid desk_scale_grid();
/// n ∈ {100, 250, 500, 1000} over the same τ and φ.
StudyGrid full_table1_grid();

/// Aggregates one cell's replicates into per-method means and standard errors.
std::vector<CellSummary> summarize_cell(const SimConfig& config,
                                        const std::vector<ReplicationRecord>& replicates);

/// Runs every (n, τ, φ) cell of `grid` with `base` supplying the remaining settings.
StudyResult run_study(const StudyGrid& grid, const SimConfig& base, unsigned jobs);

}  // namespace flcrmf
