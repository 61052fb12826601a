#include "flcrmf_cli/commands.hpp"

#include <iostream>

#include "CLI11.hpp"
#include "flcrmf/error.hpp"
#include "flcrmf_cli/ingest.hpp"
#include "flcrmf_cli/report.hpp"

namespace flcrmf::cli {

PipelineConfig RunConfig::pipeline() const {
  PipelineConfig p;
  p.spline_order = spline_order;
  p.n_basis = n_basis;
  p.ridge = ridge;
  p.fpca_threshold = fpca_threshold;
  p.frailty.alpha_init = alpha_init;
  p.frailty.estimate_alpha = !fixed_alpha;
  p.frailty.tol_inner = tol_inner;
  p.frailty.tol_outer = tol_outer;
  p.frailty.max_inner = max_inner;
  p.frailty.max_outer = max_outer;
  p.frailty.frailty_enabled = !no_frailty;
  return p;
}

SimConfig RunConfig::sim() const {
  SimConfig s;
  s.n = n;
  s.tau = tau;
  s.phi = phi;
  s.rho = rho;
  s.J = grid_size;
  s.n_test = n_test;
  s.replications = replications;
  s.seed = seed;
  s.fpca_threshold = fpca_threshold;
  s.frailty_scale = frailty_in_exponent ? FrailtyScale::kExponent : FrailtyScale::kMultiplicative;
  s.noisy_linear_predictor = noisy_predictor;
  // In the study the flag asks for the reduction rows next to FLCRM-F.
  s.compare_no_frailty = no_frailty;
  s.pipeline = pipeline();
  s.pipeline.frailty.frailty_enabled = true;
  s.pipeline.fpca_threshold = fpca_threshold;
  return s;
}

AugmentConfig RunConfig::augment_config() const {
  AugmentConfig a = augment;
  if (!race_points.empty()) {
    a.race_points.clear();
    for (const auto& entry : race_points) {
      const auto eq = entry.rfind('=');
      if (eq == std::string::npos || eq == 0) throw InputError("--race-points expects Level=points, got '" + entry + "'");
      a.race_points[entry.substr(0, eq)] = parse_number(entry.substr(eq + 1), "--race-points " + entry);
    }
  }
  return a;
}

std::string RunConfig::echo() const {
  std::string out;
  auto put = [&](const char* key, const std::string& value) { out += std::string(key) + "=" + value + "\n"; };
  auto num = [&](const char* key, double value) { put(key, format_number(value)); };
  auto flag = [&](const char* key, bool value) { put(key, value ? "true" : "false"); };
  auto model = [&] {
    num("fpca-threshold", fpca_threshold);
    put("n-basis", std::to_string(n_basis));
    num("ridge", ridge);
    put("spline-order", std::to_string(spline_order));
    num("alpha-init", alpha_init);
    flag("fixed-alpha", fixed_alpha);
    num("tol-inner", tol_inner);
    num("tol-outer", tol_outer);
    put("max-inner", std::to_string(max_inner));
    put("max-outer", std::to_string(max_outer));
  };
  put("command", command);
  if (command == "fit" || command == "bootstrap") {
    put("subjects", subjects);
    put("curves", curves);
    flag("no-frailty", no_frailty);
    model();
    if (command == "bootstrap") {
      put("seed", std::to_string(seed));
      put("replicates", std::to_string(replicates));
      flag("identity-resample", identity_resample);
    }
  } else if (command == "simulate" || command == "reproduce-table1") {
    put("seed", std::to_string(seed));
    flag("no-frailty", no_frailty);
    if (command == "simulate") {
      put("n", std::to_string(n));
      num("tau", tau);
      num("phi", phi);
      flag("emit-data", emit_data);
    } else {
      put("preset", preset);
    }
    num("rho", rho);
    put("grid-size", std::to_string(grid_size));
    put("n-test", std::to_string(n_test));
    put("replications", std::to_string(replications));
    flag("frailty-in-exponent", frailty_in_exponent);
    flag("noisy-predictor", noisy_predictor);
    model();
  } else if (command == "augment") {
    const AugmentConfig a = augment_config();
    put("subjects", subjects);
    num("age-threshold", a.age_threshold);
    num("bmi-high", a.bmi_high);
    num("bmi-low", a.bmi_low);
    num("age-points", a.age_points);
    num("bmi-points", a.bmi_points);
    num("chd-points", a.chd_points);
    std::string races;
    for (const auto& [level, points] : a.race_points) {
      races += (races.empty() ? "" : ";") + level + "=" + format_number(points);
    }
    put("race-points", races);
    num("moderate-threshold", a.moderate_threshold);
    num("moderate-factor", a.moderate_factor);
    num("severe-threshold", a.severe_threshold);
    num("severe-factor", a.severe_factor);
  }
  return out;
}

namespace {

void require_inputs(const RunConfig& config) {
  if (config.subjects.empty()) throw InputError("--subjects is required");
  if (config.curves.empty()) throw InputError("--curves is required");
}

int study_exit_code(const StudyResult& study) {
  for (const auto& cell : study.cells) {
    for (const auto& rep : cell.replicates) {
      if (rep.failed || !rep.frailty_converged) return kNotConverged;
      if (rep.no_frailty && !rep.no_frailty_converged) return kNotConverged;
    }
  }
  return kOk;
}

DatasetBundle bundle_from(const SimulatedDataset& ds) {
  std::vector<std::string> ids;
  for (Eigen::Index i = 0; i < ds.data.n(); ++i) ids.push_back(std::to_string(i + 1));
  std::vector<std::string> names;
  for (Eigen::Index k = 0; k < ds.data.Z.cols(); ++k) names.push_back("z" + std::to_string(k + 1));
  return DatasetBundle{ds.data, std::move(ids), std::move(names), {}};
}

int emit_study(const RunConfig& config, const StudyGrid& grid, PendingOutputs& outputs) {
  const SimConfig base = config.sim();
  const StudyResult study = run_study(grid, base, config.jobs);
  outputs.add("table1.csv", table1_csv(study));
  outputs.add("replications.csv", replications_csv(study));
  outputs.add("config.ini", config.echo());
  return study_exit_code(study);
}

}  // namespace

int cmd_fit(const RunConfig& config, PendingOutputs& outputs) {
  require_inputs(config);
  const DatasetBundle bundle = ingest(config.subjects, config.curves);
  const PipelineResult result = run_pipeline(bundle.data, config.pipeline());
  FitReport report{bundle.covariate_names, result.fpca.K, result.fpca.threshold, result.fit};
  outputs.add("fit.json", render_fit_json(report));
  outputs.add("beta_hat.csv", beta_csv(result.beta_hat));
  outputs.add("eigen.csv", eigen_csv(result.fpca));
  outputs.add("config.ini", config.echo());
  return result.fit.diagnostics.converged ? kOk : kNotConverged;
}

int cmd_simulate(const RunConfig& config, PendingOutputs& outputs) {
  const SimConfig sim = config.sim();
  sim.validate();
  if (config.emit_data) {
    CounterRng rng = replication_stream(sim, 0);
    const DatasetBundle bundle = bundle_from(simulate_dataset(sim.n, sim, TruthSpec{}, rng));
    outputs.add("subjects.csv", subjects_csv(bundle));
    outputs.add("curves.csv", curves_csv(bundle));
  }
  return emit_study(config, StudyGrid{{sim.n}, {sim.tau}, {sim.phi}}, outputs);
}

int cmd_reproduce_table1(const RunConfig& config, PendingOutputs& outputs) {
  StudyGrid grid;
  if (config.preset == "desk") {
    grid = desk_scale_grid();
  } else if (config.preset == "full") {
    grid = full_table1_grid();
  } else {
    throw InputError("unknown preset '" + config.preset + "' (desk or full)");
  }
  return emit_study(config, grid, outputs);
}

int cmd_bootstrap(const RunConfig& config, PendingOutputs& outputs) {
  require_inputs(config);
  const DatasetBundle bundle = ingest(config.subjects, config.curves);
  BootstrapOptions options;
  options.replicates = config.replicates;
  options.seed = config.seed;
  options.jobs = config.jobs;
  if (config.identity_resample) options.resampler = identity_resample;
  const BootstrapResult result = bootstrap_beta(bundle.data, config.pipeline(), options);
  const BootstrapSummary summary = summarize_bootstrap(result);
  outputs.add("bootstrap_long.csv", bootstrap_long_csv(result));
  outputs.add("summary.csv", bootstrap_summary_csv(bundle.data.grid, summary));
  outputs.add("config.ini", config.echo());
  if (result.skipped > 0) {
    std::cerr << "bootstrap: " << result.skipped << " of " << config.replicates
              << " resamples skipped (no events or failed fit)\n";
  }
  return kOk;
}

std::string augment_csv(const CsvTable& table, const AugmentConfig& config) {
  const char* required[] = {"age", "bmi", "chd", "race", "time"};
  std::size_t col[5];
  for (int k = 0; k < 5; ++k) {
    const long c = table.column(required[k]);
    if (c < 0) throw InputError(std::string("augment input lacks the '") + required[k] + "' column");
    col[k] = static_cast<std::size_t>(c);
  }
  if (table.column("frailty_score") >= 0) throw InputError("augment input already has a frailty_score column");

  std::vector<AugmentSubject> subjects;
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    auto where = [&](const char* name) { return "line " + std::to_string(r + 2) + ", column '" + name + "'"; };
    AugmentSubject s;
    s.age = parse_number(row[col[0]], where("age"));
    s.bmi = parse_number(row[col[1]], where("bmi"));
    const double chd = parse_number(row[col[2]], where("chd"));
    if (chd != 0.0 && chd != 1.0) throw InputError(where("chd") + ": chd must be 0 or 1");
    s.chd = static_cast<int>(chd);
    s.race = row[col[3]];
    s.time = parse_number(row[col[4]], where("time"));
    subjects.push_back(std::move(s));
  }
  const auto augmented = frailty_augment(subjects, config);

  std::string out;
  for (const auto& name : table.header) out += csv_field(name) + ",";
  out += "frailty_score\n";
  for (std::size_t r = 0; r < table.rows.size(); ++r) {
    const auto& row = table.rows[r];
    for (std::size_t c = 0; c < row.size(); ++c) {
      const bool changed = c == col[4] && augmented[r].subject.time != subjects[r].time;
      out += (changed ? format_number(augmented[r].subject.time) : csv_field(row[c])) + ",";
    }
    out += format_number(augmented[r].score) + "\n";
  }
  return out;
}

int cmd_augment(const RunConfig& config, PendingOutputs& outputs) {
  if (config.subjects.empty()) throw InputError("--subjects is required");
  const AugmentConfig a = config.augment_config();
  outputs.add("augmented.csv", augment_csv(read_csv(config.subjects), a));
  outputs.add("config.ini", config.echo());
  return kOk;
}

int run_cli(int argc, char** argv) {
  RunConfig config;
  CLI::App app{"Functional linear Cox regression with frailty"};
  app.set_config("--config", "", "key=value file; command-line flags take precedence");
  app.allow_config_extras(CLI::config_extras_mode::error);
  app.add_option("command", config.command, "fit | simulate | reproduce-table1 | bootstrap | augment")
      ->required()
      ->check(CLI::IsMember({"fit", "simulate", "reproduce-table1", "bootstrap", "augment"}));

  app.add_option("--subjects", config.subjects, "subjects CSV (id,time,status[,group],covariates...)");
  app.add_option("--curves", config.curves, "curves CSV (grid header row, then id,x_1..x_J)");
  app.add_option("--out", config.out, "output directory")->capture_default_str();
  app.add_option("--seed", config.seed, "random seed")->capture_default_str();
  app.add_option("--jobs", config.jobs, "worker threads")->capture_default_str()->check(CLI::Range(1u, 1024u));
  app.add_flag("--no-frailty", config.no_frailty,
               "fit without frailty; for studies, add the no-frailty rows");

  app.add_option("--fpca-threshold", config.fpca_threshold)->capture_default_str()->check(CLI::Range(0.0, 1.0));
  app.add_option("--n-basis", config.n_basis)->capture_default_str();
  app.add_option("--ridge", config.ridge)->capture_default_str();
  app.add_option("--spline-order", config.spline_order)->capture_default_str();
  app.add_option("--alpha-init", config.alpha_init)->capture_default_str();
  app.add_flag("--fixed-alpha", config.fixed_alpha, "keep alpha at --alpha-init");
  app.add_option("--tol-inner", config.tol_inner)->capture_default_str();
  app.add_option("--tol-outer", config.tol_outer)->capture_default_str();
  app.add_option("--max-inner", config.max_inner)->capture_default_str();
  app.add_option("--max-outer", config.max_outer)->capture_default_str();

  app.add_option("--n", config.n, "simulate: sample size")->capture_default_str();
  app.add_option("--tau", config.tau, "simulate: censoring rate")->capture_default_str();
  app.add_option("--phi", config.phi, "simulate: frailty variance")->capture_default_str();
  app.add_option("--rho", config.rho)->capture_default_str();
  app.add_option("--grid-size", config.grid_size)->capture_default_str();
  app.add_option("--n-test", config.n_test, "0 means same as --n")->capture_default_str();
  app.add_option("--replications", config.replications)->capture_default_str();
  app.add_option("--preset", config.preset, "reproduce-table1: desk or full")->capture_default_str();
  app.add_flag("--frailty-in-exponent", config.frailty_in_exponent, "generator uses exp(eta + w)");
  app.add_flag("--noisy-predictor", config.noisy_predictor, "generate times from the noisy curves");
  app.add_flag("--emit-data", config.emit_data, "simulate: also write replicate 0's training data");

  app.add_option("--replicates", config.replicates, "bootstrap: resamples")->capture_default_str();
  app.add_flag("--identity-resample", config.identity_resample, "bootstrap: reuse the data as is");

  app.add_option("--age-threshold", config.augment.age_threshold)->capture_default_str();
  app.add_option("--bmi-high", config.augment.bmi_high)->capture_default_str();
  app.add_option("--bmi-low", config.augment.bmi_low)->capture_default_str();
  app.add_option("--age-points", config.augment.age_points)->capture_default_str();
  app.add_option("--bmi-points", config.augment.bmi_points)->capture_default_str();
  app.add_option("--chd-points", config.augment.chd_points)->capture_default_str();
  app.add_option("--race-points", config.race_points, "Level=points, replaces the default race table")
      ->delimiter(';');
  app.add_option("--moderate-threshold", config.augment.moderate_threshold)->capture_default_str();
  app.add_option("--moderate-factor", config.augment.moderate_factor)->capture_default_str();
  app.add_option("--severe-threshold", config.augment.severe_threshold)->capture_default_str();
  app.add_option("--severe-factor", config.augment.severe_factor)->capture_default_str();

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kInputError;
  }

  PendingOutputs outputs;
  int code = kOk;
  try {
    if (config.command == "fit") {
      code = cmd_fit(config, outputs);
    } else if (config.command == "simulate") {
      code = cmd_simulate(config, outputs);
    } else if (config.command == "reproduce-table1") {
      code = cmd_reproduce_table1(config, outputs);
    } else if (config.command == "bootstrap") {
      code = cmd_bootstrap(config, outputs);
    } else {
      code = cmd_augment(config, outputs);
    }
    outputs.commit(config.out);
  } catch (const InputError& e) {
    std::cerr << "input error: " << e.what() << "\n";
    return kInputError;
  } catch (const NumericalError& e) {
    std::cerr << "numerical failure: " << e.what() << "\n";
    return kNumericalError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return kInputError;
  }
  if (code == kNotConverged) std::cerr << "warning: not converged; outputs written with flags\n";
  return code;
}

}  // namespace flcrmf::cli
