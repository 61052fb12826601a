#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "flcrmf/error.hpp"
#include "flcrmf/inference.hpp"
#include "flcrmf/pipeline.hpp"
#include "flcrmf/simulation.hpp"
#include "support/oracles.hpp"

using namespace flcrmf;

namespace {

FpcaBasis basis_on(const SamplingGrid& g, std::uint64_t seed, double threshold) {
  CounterRng rng = CounterRng::substream(seed, {2});
  SmoothedCurves s;
  s.fitted = gen_functional_predictor(80, g, rng).true_curves;
  const SmoothedCurves c = center_curves(s);
  return with_truncation(eigendecompose(empirical_covariance(c, g)), threshold);
}

// Noise-free curves built from three smooth components and survival times
// driven by a strong functional effect.
FunctionalSurvivalData strong_signal(int n, std::uint64_t seed) {
  CounterRng rng = CounterRng::substream(seed, {3});
  const SamplingGrid g = SamplingGrid::equidistant(0.0, 1.0, 51);
  Eigen::MatrixXd X(n, 51);
  Eigen::MatrixXd Z(n, 1);
  std::vector<SurvivalRecord> recs;
  const Eigen::ArrayXd s = g.points().array();
  const Eigen::VectorXd beta = (2.0 * M_PI * s).sin().matrix() * 2.0;
  for (int i = 0; i < n; ++i) {
    const double a = oracle::normal(rng), b = oracle::normal(rng, 0.7), c = oracle::normal(rng, 0.4);
    X.row(i) = (a * (2.0 * M_PI * s).sin() + b * (2.0 * M_PI * s).cos() + c * (s - 0.5)).matrix().transpose();
    Z(i, 0) = oracle::normal(rng);
    const double eta = 0.5 * Z(i, 0) + g.integrate(X.row(i).transpose().cwiseProduct(beta));
    const double t = -std::log(oracle::uniform(rng, 1e-12, 1.0)) / std::exp(eta);
    const double cens = -std::log(oracle::uniform(rng, 1e-12, 1.0)) / 0.1;
    recs.push_back(SurvivalRecord{std::min(t, cens), t <= cens ? 1 : 0, 0});
  }
  return FunctionalSurvivalData{g, RawCurves{X}, recs, Z, 0};
}

}  // namespace

TEST_CASE("reconstruct_beta: unit, zero and Parseval") {
  const SamplingGrid g = SamplingGrid::equidistant(0.0, 1.0, 101);
  FpcaBasis fp = basis_on(g, 1, 0.85);
  fp.K = 3;
  Eigen::VectorXd e1 = Eigen::VectorXd::Zero(3);
  e1(0) = 1.0;
  CHECK(reconstruct_beta(e1, fp, g).values == fp.eigenfunctions.row(0).transpose());
  CHECK(reconstruct_beta(Eigen::VectorXd::Zero(3), fp, g).values.isZero(0.0));
  CounterRng rng(4);
  const Eigen::Vector3d b(oracle::normal(rng), oracle::normal(rng), oracle::normal(rng));
  const CoefficientFunction cf = reconstruct_beta(b, fp, g);
  CHECK(std::abs(g.integrate(cf.values.array().square().matrix()) - b.squaredNorm()) < 1e-8);
  const Eigen::Vector3d u(0.3, -1.0, 2.0), v(1.5, 0.2, -0.7);
  const Eigen::VectorXd lhs = reconstruct_beta(2.0 * u - 3.0 * v, fp, g).values;
  const Eigen::VectorXd rhs = 2.0 * reconstruct_beta(u, fp, g).values - 3.0 * reconstruct_beta(v, fp, g).values;
  CHECK((lhs - rhs).cwiseAbs().maxCoeff() < 1e-12);
  CHECK_THROWS_AS(reconstruct_beta(Eigen::VectorXd::Zero(2), fp, g), InputError);
}

TEST_CASE("mse and imse: arithmetic examples") {
  const Eigen::VectorXd truth = Eigen::VectorXd::Constant(6, 0.5);
  CHECK(mse_gamma(truth, truth) == 0.0);
  CHECK(mse_gamma(truth.array() + 0.1, truth) == doctest::Approx(0.06).epsilon(1e-12));
  const SamplingGrid g = SamplingGrid::equidistant(0.0, 1.0, 101);
  const Eigen::VectorXd beta = (g.points().array() * 3.0).sin();
  CHECK(imse_beta(CoefficientFunction{g, beta}, beta) == 0.0);
  CHECK(imse_beta(CoefficientFunction{g, beta.array() + 1.0}, beta) == doctest::Approx(1.0).epsilon(1e-12));
  // Constant difference 0.5 and its Riemann refinement.
  CHECK(imse_beta(CoefficientFunction{g, beta.array() + 0.5}, beta) == doctest::Approx(0.25).epsilon(1e-12));
  double riemann = 0.0;
  const int m = 100000;
  for (int k = 0; k < m; ++k) riemann += 0.25 / m;
  CHECK(imse_beta(CoefficientFunction{g, beta.array() + 0.5}, beta) == doctest::Approx(riemann).epsilon(1e-9));
}

TEST_CASE("concordance: perfect, constant and brute-force") {
  std::vector<SurvivalRecord> recs;
  Eigen::VectorXd risk(6);
  for (int i = 0; i < 6; ++i) {
    recs.push_back(SurvivalRecord{1.0 + i, 1, 0});
    risk(i) = 10.0 - i;
  }
  CHECK(concordance(recs, risk) == 1.0);
  CHECK(concordance(recs, Eigen::VectorXd::Constant(6, 2.0)) == 0.5);
  CHECK(concordance(recs, -risk) == 0.0);

  CounterRng rng(5);
  for (int trial = 0; trial < 20; ++trial) {
    const int n = 10 + 4 * trial;
    auto r = oracle::random_records(rng, n, trial % 2 == 0, 0.4);
    Eigen::VectorXd score(n);
    for (int i = 0; i < n; ++i) score(i) = std::round(oracle::normal(rng) * (trial % 3 == 0 ? 2.0 : 100.0));
    const ConcordanceCounts c = concordance_counts(r, score);
    const oracle::PairCounts o = oracle::concordance_pairs(r, score);
    CHECK(c.concordant == o.concordant);
    CHECK(c.tied_risk == o.ties);
    CHECK(c.comparable == o.comparable);
    const Eigen::VectorXd mono = (score.array() * 0.01).exp() * 3.0 + 1.0;
    CHECK(concordance(r, mono) == concordance(r, score));
  }
  std::vector<SurvivalRecord> censored{{1.0, 0, 0}, {2.0, 0, 0}};
  CHECK_THROWS_AS(concordance(censored, Eigen::VectorXd::Zero(2)), InputError);
  std::vector<SurvivalRecord> same{{1.0, 1, 0}, {1.0, 1, 0}};
  CHECK_THROWS_AS(concordance(same, Eigen::Vector2d(1.0, 2.0)), InputError);
}

TEST_CASE("quantile: type 7 interpolation") {
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.5) == 2.5);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 0.0) == 1.0);
  CHECK(quantile({3.0, 1.0, 2.0, 4.0}, 1.0) == 4.0);
  CHECK(quantile({1.0, 2.0, 3.0, 4.0, 5.0}, 0.025) == doctest::Approx(1.1));
  CHECK_THROWS_AS(quantile({}, 0.5), InputError);
}

TEST_CASE("bootstrap: identity resample reproduces the full-data estimate") {
  const FunctionalSurvivalData data = strong_signal(120, 1);
  const PipelineConfig cfg;
  const PipelineResult full = run_pipeline(data, cfg);
  BootstrapOptions opt;
  opt.replicates = 1;
  opt.resampler = identity_resample;
  const BootstrapResult br = bootstrap_beta(data, cfg, opt);
  REQUIRE(br.curves.size() == 1);
  CHECK(br.curves[0].values == full.beta_hat.values);
  const BootstrapSummary s = summarize_bootstrap(br);
  CHECK(s.mean == full.beta_hat.values);
  CHECK(s.p50 == full.beta_hat.values);
}

TEST_CASE("bootstrap: self-consistency band, nonnegative variance, determinism") {
  const FunctionalSurvivalData data = strong_signal(150, 2);
  PipelineConfig cfg;
  cfg.fpca_threshold = 0.95;
  const PipelineResult full = run_pipeline(data, cfg);
  BootstrapOptions opt;
  opt.replicates = 50;
  opt.seed = 17;
  opt.jobs = 4;
  const BootstrapResult br = bootstrap_beta(data, cfg, opt);
  CHECK(br.skipped == 0);
  const BootstrapSummary s = summarize_bootstrap(br);
  CHECK((s.variance.array() >= 0.0).all());
  const Eigen::ArrayXd sd = s.variance.array().sqrt();
  CHECK(((s.mean - full.beta_hat.values).array().abs() <= 2.0 * sd + 1e-12).all());
  int bracketed = 0;
  for (Eigen::Index j = 0; j < s.mean.size(); ++j) {
    bracketed += (s.p025(j) <= full.beta_hat.values(j) && full.beta_hat.values(j) <= s.p975(j)) ? 1 : 0;
  }
  CHECK(bracketed >= static_cast<int>(0.9 * static_cast<double>(s.mean.size())));

  opt.jobs = 1;
  const BootstrapResult serial = bootstrap_beta(data, cfg, opt);
  REQUIRE(serial.curves.size() == br.curves.size());
  for (std::size_t b = 0; b < br.curves.size(); ++b) CHECK(serial.curves[b].values == br.curves[b].values);
}

TEST_CASE("bootstrap: resamples without events are skipped") {
  FunctionalSurvivalData data = strong_signal(40, 3);
  for (auto& r : data.records) r.status = 0;
  data.records[0].status = 1;
  BootstrapOptions opt;
  opt.replicates = 30;
  opt.seed = 5;
  const BootstrapResult br = bootstrap_beta(data, PipelineConfig{}, opt);
  CHECK(br.skipped > 0);
  CHECK(br.skipped + static_cast<int>(br.curves.size()) == 30);
}
