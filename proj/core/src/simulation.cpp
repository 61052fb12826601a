#include "flcrmf/simulation.hpp"

#include <Eigen/Cholesky>
#include <bit>
#include <boost/math/constants/constants.hpp>
#include <boost/random/exponential_distribution.hpp>
#include <boost/random/gamma_distribution.hpp>
#include <boost/random/normal_distribution.hpp>
#include <cmath>
#include <limits>

#include "flcrmf/error.hpp"
#include "flcrmf/parallel.hpp"

namespace flcrmf {

namespace {

constexpr double kPi = boost::math::constants::pi<double>();
constexpr int kFrequencies = 10;
constexpr double kNoiseVariance = 0.5;
constexpr double kCovariateCrossCov = 0.1;
constexpr Eigen::Index kScalarCovariates = 6;

}  // namespace

void SimConfig::validate() const {
  if (n < 20) throw InputError("simulation sample size must be at least 20");
  if (n_test < 0) throw InputError("test sample size must be nonnegative");
  if (!(tau >= 0.0)) throw InputError("censoring rate τ must be nonnegative");
  if (!(phi > 0.0)) throw InputError("frailty variance φ must be positive");
  if (!(rho >= 0.0 && rho < 1.0)) throw InputError("ρ must lie in [0, 1)");
  if (J < 4) throw InputError("grid size J must be at least 4");
  if (replications < 1) throw InputError("replications must be at least 1");
  if (!(fpca_threshold > 0.0 && fpca_threshold < 1.0)) throw InputError("FPCA threshold must lie in (0, 1)");
  pipeline.frailty.validate();
}

double gaussian_bump_term(double s) {
  return 0.3 * std::exp(-0.5 * (s - 0.5) * (s - 0.5)) / std::sqrt(2.0 * kPi);
}

double TruthSpec::beta(double s) {
  const double p = kPi;
  const double trig = std::sin(p * s) - std::cos(p * s) + std::sin(3.0 * p * s / 10.0) -
                      std::cos(3.0 * p * s) + std::sin(5.0 * p * s) / 9.0 -
                      std::cos(5.0 * p * s) / 9.0 + std::sin(7.0 * p * s) / 16.0 -
                      std::cos(7.0 * p * s) / 16.0 + std::sin(9.0 * p * s) / 25.0 +
                      std::cos(9.0 * p * s) / 25.0;
  return 0.3 * trig + gaussian_bump_term(s);
}

Eigen::VectorXd beta_true_eval(const SamplingGrid& grid) {
  Eigen::VectorXd out(grid.size());
  for (Eigen::Index j = 0; j < grid.size(); ++j) out(j) = TruthSpec::beta(grid.points()(j));
  return out;
}

FunctionalDraw gen_functional_predictor(Eigen::Index n, const SamplingGrid& grid, CounterRng& rng) {
  const Eigen::Index J = grid.size();
  const Eigen::ArrayXd s = grid.points().array();
  // Basis rows: 1, s, then sin/cos pairs for each frequency.
  Eigen::MatrixXd design(2 + 2 * kFrequencies, J);
  design.row(0).setOnes();
  design.row(1) = s.matrix().transpose();
  for (int j = 1; j <= kFrequencies; ++j) {
    const double omega = 2.0 * (2.0 * j - 1.0) * kPi;
    design.row(2 * j) = (omega * s).sin().matrix().transpose();
    design.row(2 * j + 1) = (omega * s).cos().matrix().transpose();
  }

  boost::random::normal_distribution<double> standard(0.0, 1.0);
  FunctionalDraw out;
  Eigen::MatrixXd coef(n, 2 + 2 * kFrequencies);
  out.v11.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    coef(i, 0) = standard(rng);
    coef(i, 1) = standard(rng);
    for (int j = 1; j <= kFrequencies; ++j) {
      coef(i, 2 * j) = j * standard(rng);
      coef(i, 2 * j + 1) = j * standard(rng);
    }
    out.v11(i) = coef(i, 2);
  }
  out.true_curves = coef * design;
  const double noise_sd = std::sqrt(kNoiseVariance);
  out.noisy_curves = out.true_curves;
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index j = 0; j < J; ++j) out.noisy_curves(i, j) += noise_sd * standard(rng);
  }
  return out;
}

Eigen::MatrixXd gen_scalar_covariates(Eigen::Index n, double rho, const Eigen::VectorXd& v11,
                                      CounterRng& rng) {
  if (v11.size() != n) throw InputError("v11 length does not match n");
  if (!v11.allFinite()) throw InputError("v11 contains non-finite values");
  const Eigen::Index p = kScalarCovariates;
  Eigen::MatrixXd conditional(p, p);
  for (Eigen::Index j = 0; j < p; ++j) {
    for (Eigen::Index k = 0; k < p; ++k) {
      conditional(j, k) = std::pow(rho, static_cast<double>(std::abs(j - k))) -
                          kCovariateCrossCov * kCovariateCrossCov;
    }
  }
  const Eigen::LLT<Eigen::MatrixXd> llt(conditional);
  if (llt.info() != Eigen::Success) {
    throw InputError("conditional covariance of Z given v11 is not positive definite");
  }
  const Eigen::MatrixXd L = llt.matrixL();
  boost::random::normal_distribution<double> standard(0.0, 1.0);
  Eigen::MatrixXd Z(n, p);
  Eigen::VectorXd eps(p);
  for (Eigen::Index i = 0; i < n; ++i) {
    for (Eigen::Index k = 0; k < p; ++k) eps(k) = standard(rng);
    Z.row(i) = (L * eps).transpose().array() + kCovariateCrossCov * v11(i);
  }
  return Z;
}

Eigen::VectorXd gen_frailty(Eigen::Index n, double phi, CounterRng& rng) {
  if (!(phi > 0.0)) throw InputError("frailty variance φ must be positive");
  boost::random::gamma_distribution<double> gamma(1.0 / phi, phi);
  Eigen::VectorXd w(n);
  for (Eigen::Index i = 0; i < n; ++i) w(i) = gamma(rng);
  return w;
}

std::vector<SurvivalRecord> gen_survival(const Eigen::MatrixXd& Z, const Eigen::MatrixXd& curves,
                                         const Eigen::VectorXd& w,
                                         const Eigen::VectorXd& beta_on_grid,
                                         const Eigen::VectorXd& gamma_true, double tau,
                                         const SamplingGrid& grid, CounterRng& rng,
                                         FrailtyScale scale) {
  const Eigen::Index n = Z.rows();
  if (curves.rows() != n || w.size() != n) throw InputError("simulation inputs differ in length");
  if (Z.cols() != gamma_true.size()) throw InputError("Z columns do not match γ");
  if (curves.cols() != grid.size() || beta_on_grid.size() != grid.size()) {
    throw InputError("curves and β must be on the simulation grid");
  }
  if (!(tau >= 0.0)) throw InputError("censoring rate τ must be nonnegative");

  const Eigen::VectorXd functional = curves * grid.weights().cwiseProduct(beta_on_grid);
  const Eigen::VectorXd scalar = Z * gamma_true;
  boost::random::exponential_distribution<double> unit(1.0);
  const auto positive_draw = [&]() {
    double e = unit(rng);
    while (!(e > 0.0)) e = unit(rng);
    return e;
  };

  std::vector<SurvivalRecord> records(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    double frailty_term = w(i);
    if (scale == FrailtyScale::kMultiplicative) {
      frailty_term = std::log(std::max(w(i), std::numeric_limits<double>::min()));
    }
    const double eta = scalar(i) + functional(i) + frailty_term;
    const double event = positive_draw() * std::exp(-eta);
    const double censor = tau > 0.0 ? positive_draw() / tau : std::numeric_limits<double>::infinity();
    auto& rec = records[static_cast<std::size_t>(i)];
    rec.status = event < censor ? 1 : 0;
    rec.time = std::max(std::min(event, censor), std::numeric_limits<double>::min());
    rec.group = i;
  }
  return records;
}

SimulatedDataset simulate_dataset(Eigen::Index n, const SimConfig& config, const TruthSpec& truth,
                                  CounterRng& rng) {
  const SamplingGrid grid = SamplingGrid::equidistant(0.0, 1.0, config.J);
  FunctionalDraw curves = gen_functional_predictor(n, grid, rng);
  Eigen::MatrixXd Z = gen_scalar_covariates(n, config.rho, curves.v11, rng);
  Eigen::VectorXd w = gen_frailty(n, config.phi, rng);
  const Eigen::MatrixXd& driver = config.noisy_linear_predictor ? curves.noisy_curves : curves.true_curves;
  std::vector<SurvivalRecord> records = gen_survival(Z, driver, w, beta_true_eval(grid),
                                                     truth.gamma_true, config.tau, grid, rng,
                                                     config.frailty_scale);
  return SimulatedDataset{
      FunctionalSurvivalData{grid, RawCurves{std::move(curves.noisy_curves)}, std::move(records),
                             std::move(Z), 0},
      std::move(curves.true_curves), std::move(w)};
}

double censoring_rate(const std::vector<SurvivalRecord>& records) {
  if (records.empty()) throw InputError("censoring rate of an empty sample");
  double events = 0.0;
  for (const auto& r : records) events += r.status;
  return 1.0 - events / static_cast<double>(records.size());
}

ReplicationRecord run_replication(const SimConfig& config, const TruthSpec& truth, CounterRng& rng) {
  config.validate();
  ReplicationRecord rec;
  rec.stream_key = rng.key();
  const SimulatedDataset train = simulate_dataset(config.n, config, truth, rng);
  const SimulatedDataset test = simulate_dataset(config.test_size(), config, truth, rng);
  rec.frailty.censor_rate = censoring_rate(train.data.records);

  PipelineConfig pc = config.pipeline;
  pc.fpca_threshold = config.fpca_threshold;
  pc.frailty.frailty_enabled = true;
  try {
    const PipelineResult fitted = run_pipeline(train.data, pc);
    const Eigen::VectorXd beta_true = beta_true_eval(train.data.grid);
    const Eigen::MatrixXd test_scores = project_curves(fitted, test.data.curves, pc);
    rec.K_selected = fitted.fpca.K;

    const auto metrics_for = [&](const FrailtyFit& f) {
      MetricsRecord m;
      const Eigen::VectorXd eta_in = fitted.design.linear_predictor(f.theta(), f.w_hat);
      m.ci_in = concordance(train.data.records, eta_in);
      m.ci_out = concordance(test.data.records, predict_risk(f, test.data.Z, test_scores, false));
      m.mse_gamma = mse_gamma(f.gamma_hat, truth.gamma_true);
      m.imse_beta = imse_beta(reconstruct_beta(f.beta_coef_hat, fitted.fpca, train.data.grid), beta_true);
      m.censor_rate = rec.frailty.censor_rate;
      return m;
    };

    rec.frailty = metrics_for(fitted.fit);
    rec.frailty_converged = fitted.fit.diagnostics.converged;
    rec.alpha_hat = fitted.fit.alpha_hat;
    rec.outer_iterations = fitted.fit.diagnostics.outer_iterations;
    for (const int it : fitted.fit.diagnostics.inner_iterations) {
      rec.max_inner_iterations = std::max(rec.max_inner_iterations, it);
    }

    if (config.compare_no_frailty) {
      FrailtyConfig plain = pc.frailty;
      plain.frailty_enabled = false;
      const FrailtyFit reduced = fit(fitted.design, plain);
      rec.no_frailty = metrics_for(reduced);
      rec.no_frailty_converged = reduced.diagnostics.converged;
    }
  } catch (const NumericalError& e) {
    rec.failed = true;
    rec.failure = e.what();
  }
  return rec;
}

CounterRng replication_stream(const SimConfig& config, int rep) {
  return CounterRng::substream(config.seed, {static_cast<std::uint64_t>(config.n),
                                             std::bit_cast<std::uint64_t>(config.tau),
                                             std::bit_cast<std::uint64_t>(config.phi),
                                             static_cast<std::uint64_t>(rep)});
}

StudyGrid desk_scale_grid() { return StudyGrid{{100, 250}, {0.01, 0.1, 0.2}, {0.01, 1.0, 1.5, 2.0}}; }

StudyGrid full_table1_grid() {
  return StudyGrid{{100, 250, 500, 1000}, {0.01, 0.1, 0.2}, {0.01, 1.0, 1.5, 2.0}};
}

namespace {

struct Moments {
  double sum = 0.0;
  double sum_sq = 0.0;
  void add(double x) {
    sum += x;
    sum_sq += x * x;
  }
  double mean(int count) const { return sum / count; }
  double se(int count) const {
    if (count < 2) return 0.0;
    const double m = mean(count);
    const double var = std::max(0.0, (sum_sq - count * m * m) / (count - 1));
    return std::sqrt(var / count);
  }
};

CellSummary summarize_method(const SimConfig& config, const std::string& method,
                             const std::vector<const MetricsRecord*>& metrics, int converged) {
  CellSummary s;
  s.tau = config.tau;
  s.phi = config.phi;
  s.n = config.n;
  s.method = method;
  s.replications = static_cast<int>(metrics.size());
  s.converged = converged;
  if (metrics.empty()) return s;
  Moments ci_in, ci_out, mse, imse, psi;
  for (const MetricsRecord* m : metrics) {
    ci_in.add(m->ci_in);
    ci_out.add(m->ci_out);
    mse.add(m->mse_gamma);
    imse.add(m->imse_beta);
    psi.add(m->censor_rate);
  }
  const int c = s.replications;
  s.mean = MetricsRecord{ci_in.mean(c), ci_out.mean(c), mse.mean(c), imse.mean(c), psi.mean(c)};
  s.se = MetricsRecord{ci_in.se(c), ci_out.se(c), mse.se(c), imse.se(c), psi.se(c)};
  return s;
}

}  // namespace

std::vector<CellSummary> summarize_cell(const SimConfig& config,
                                        const std::vector<ReplicationRecord>& replicates) {
  std::vector<const MetricsRecord*> frailty;
  std::vector<const MetricsRecord*> plain;
  int frailty_converged = 0;
  int plain_converged = 0;
  for (const auto& r : replicates) {
    if (r.failed) continue;
    frailty.push_back(&r.frailty);
    frailty_converged += r.frailty_converged ? 1 : 0;
    if (r.no_frailty) {
      plain.push_back(&*r.no_frailty);
      plain_converged += r.no_frailty_converged ? 1 : 0;
    }
  }
  std::vector<CellSummary> out;
  out.push_back(summarize_method(config, "FLCRM-F", frailty, frailty_converged));
  if (!plain.empty()) out.push_back(summarize_method(config, "FLCRM", plain, plain_converged));
  return out;
}

StudyResult run_study(const StudyGrid& grid, const SimConfig& base, unsigned jobs) {
  if (grid.n.empty() || grid.tau.empty() || grid.phi.empty()) throw InputError("study grid is empty");
  StudyResult result;
  for (const double tau : grid.tau) {
    for (const double phi : grid.phi) {
      for (const Eigen::Index n : grid.n) {
        SimConfig cell = base;
        cell.tau = tau;
        cell.phi = phi;
        cell.n = n;
        cell.validate();
        result.cells.push_back(StudyCell{cell, std::vector<ReplicationRecord>(
                                                   static_cast<std::size_t>(cell.replications))});
      }
    }
  }
  std::vector<std::pair<std::size_t, int>> tasks;
  for (std::size_t c = 0; c < result.cells.size(); ++c) {
    for (int r = 0; r < result.cells[c].config.replications; ++r) tasks.emplace_back(c, r);
  }
  const TruthSpec truth;
  parallel_for(tasks.size(), jobs, [&](std::size_t t) {
    const auto [c, r] = tasks[t];
    StudyCell& cell = result.cells[c];
    CounterRng rng = replication_stream(cell.config, r);
    ReplicationRecord rec = run_replication(cell.config, truth, rng);
    rec.replicate = r;
    cell.replicates[static_cast<std::size_t>(r)] = std::move(rec);
  });
  for (const auto& cell : result.cells) {
    for (auto& row : summarize_cell(cell.config, cell.replicates)) result.table.push_back(std::move(row));
  }
  return result;
}

}  // namespace flcrmf
