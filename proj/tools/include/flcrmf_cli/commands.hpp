#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flcrmf/augment.hpp"
#include "flcrmf/pipeline.hpp"
#include "flcrmf/simulation.hpp"
#include "flcrmf_cli/csv.hpp"
#include "flcrmf_cli/output.hpp"

namespace flcrmf::cli {

enum ExitCode : int { kOk = 0, kInputError = 1, kNumericalError = 2, kNotConverged = 3 };

/// Every setting a command can take. Defaults mirror the library defaults.
struct RunConfig {
  std::string command;
  std::string subjects;
  std::string curves;
  std::string out = "out";
  std::uint64_t seed = 1;
  unsigned jobs = 1;
  bool no_frailty = false;

  double fpca_threshold = kDefaultFpcaThreshold;
  long n_basis = kDefaultBasisSize;
  double ridge = kDefaultRidge;
  int spline_order = kDefaultSplineOrder;
  double alpha_init = 0.5;
  bool fixed_alpha = false;
  double tol_inner = 1e-7;
  double tol_outer = 1e-5;
  int max_inner = 50;
  int max_outer = 30;

  // simulate / reproduce-table1
  long n = 250;
  double tau = 0.01;
  double phi = 0.01;
  double rho = 0.5;
  long grid_size = 101;
  long n_test = 0;
  int replications = 100;
  std::string preset = "desk";
  bool frailty_in_exponent = false;
  bool noisy_predictor = false;
  bool emit_data = false;

  // bootstrap
  int replicates = 500;
  bool identity_resample = false;

  // augment
  AugmentConfig augment;
  std::vector<std::string> race_points;  ///< "Level=points" overrides

  PipelineConfig pipeline() const;
  SimConfig sim() const;
  AugmentConfig augment_config() const;
  /// `key=value` lines of every setting the command reads, in a fixed order.
  std::string echo() const;
};

/// Each command renders its files into `outputs` without touching the disk
/// and returns the exit code. Errors propagate as exceptions.
int cmd_fit(const RunConfig& config, PendingOutputs& outputs);
int cmd_simulate(const RunConfig& config, PendingOutputs& outputs);
int cmd_reproduce_table1(const RunConfig& config, PendingOutputs& outputs);
int cmd_bootstrap(const RunConfig& config, PendingOutputs& outputs);
int cmd_augment(const RunConfig& config, PendingOutputs& outputs);

/// Applies the augmentation to a CSV table with columns age, bmi, chd, race
/// and time; other columns pass through and a frailty_score column is added.
std::string augment_csv(const CsvTable& table, const AugmentConfig& config);

/// Parses arguments, runs the command, commits outputs and maps errors to
/// exit codes. Diagnostics go to stderr.
int run_cli(int argc, char** argv);

}  // namespace flcrmf::cli
