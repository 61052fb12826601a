#include "doctest.h"

#include <Eigen/Dense>
#include <cmath>

#include "flcrmf/error.hpp"
#include "flcrmf/frailty_cox.hpp"
#include "flcrmf/inference.hpp"
#include "flcrmf/simulation.hpp"
#include "support/oracles.hpp"

using namespace flcrmf;

namespace {

Eigen::VectorXd random_vector(CounterRng& rng, Eigen::Index n, double sd) {
  Eigen::VectorXd v(n);
  for (Eigen::Index i = 0; i < n; ++i) v(i) = oracle::normal(rng, sd);
  return v;
}

std::vector<SurvivalRecord> records_from(std::initializer_list<std::pair<double, int>> rows) {
  std::vector<SurvivalRecord> out;
  for (const auto& [t, s] : rows) out.push_back(SurvivalRecord{t, s, 0});
  return out;
}

FrailtyConfig no_frailty() {
  FrailtyConfig c;
  c.frailty_enabled = false;
  return c;
}

}  // namespace

TEST_CASE("ppl: null model equals -log(n!)") {
  CounterRng rng(1);
  std::vector<SurvivalRecord> recs;
  for (int i = 0; i < 7; ++i) recs.push_back(SurvivalRecord{1.0 + i * 0.5, 1, 0});
  const CoxDesign d(recs, random_vector(rng, 7, 1.0), Eigen::MatrixXd(7, 0));
  CHECK(penalized_partial_loglik(Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(7), 0.7, d) ==
        doctest::Approx(-std::lgamma(8.0)).epsilon(1e-14));
}

TEST_CASE("ppl: single subject is only the penalty") {
  const CoxDesign d(records_from({{2.0, 1}}), Eigen::MatrixXd::Constant(1, 1, 0.4), Eigen::MatrixXd(1, 0));
  Eigen::VectorXd w(1);
  w << 0.8;
  CHECK(penalized_partial_loglik(Eigen::VectorXd::Constant(1, 1.3), w, 2.0, d) ==
        doctest::Approx(-0.64 / 4.0).epsilon(1e-14));
}

TEST_CASE("ppl: matches a literal term-by-term sum, with and without ties") {
  CounterRng rng(2);
  for (bool ties : {false, true}) {
    for (int groups : {0, 2}) {
      const CoxDesign d = oracle::random_design(rng, {5, 2, 1, groups, ties, 0.3, 0.5});
      for (int rep = 0; rep < 5; ++rep) {
        const Eigen::VectorXd theta = random_vector(rng, d.q(), 0.7);
        const Eigen::VectorXd w = random_vector(rng, d.d(), 0.5);
        const double lib = penalized_partial_loglik(theta, w, 0.8, d);
        CHECK(lib == doctest::Approx(oracle::ppl_literal(theta, w, 0.8, d)).epsilon(1e-13));
      }
    }
  }
}

TEST_CASE("ppl: large linear predictors do not overflow") {
  CounterRng rng(3);
  const CoxDesign d = oracle::random_design(rng, {20, 1, 0, 0, false, 0.2, 0.5});
  const Eigen::VectorXd theta = Eigen::VectorXd::Constant(1, 400.0);
  const double v = penalized_partial_loglik(theta, Eigen::VectorXd::Zero(20), 1.0, d);
  CHECK(std::isfinite(v));
  CHECK(v <= 0.0);
}

TEST_CASE("score: symmetric design at the origin") {
  std::vector<SurvivalRecord> recs;
  Eigen::MatrixXd Z(6, 2);
  const double t[] = {1.0, 2.0, 3.5};
  for (int k = 0; k < 3; ++k) {
    recs.push_back(SurvivalRecord{t[k], 1, 0});
    recs.push_back(SurvivalRecord{t[k], 1, 0});
    Z.row(2 * k) << 0.3 * (k + 1), -1.1 * k;
    Z.row(2 * k + 1) = -Z.row(2 * k);
  }
  const CoxDesign d(recs, Z, Eigen::MatrixXd(6, 0));
  const auto [st, sw] = ppl_score(Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(6), 1.0, d);
  CHECK(st.cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("score: penalty contributes nothing at w = 0") {
  CounterRng rng(4);
  const CoxDesign d = oracle::random_design(rng, {15, 2, 1, 0, false, 0.3, 0.5});
  const Eigen::VectorXd theta = random_vector(rng, d.q(), 0.5);
  const auto a = ppl_score(theta, Eigen::VectorXd::Zero(d.d()), 0.01, d);
  const auto b = ppl_score(theta, Eigen::VectorXd::Zero(d.d()), 100.0, d);
  CHECK(a.second == b.second);
}

TEST_CASE("score and hessian: central finite differences") {
  CounterRng rng(5);
  for (int design = 0; design < 3; ++design) {
    const CoxDesign d = oracle::random_design(rng, {25, 2, 2, design == 2 ? 5 : 0, design == 1, 0.3, 0.4});
    const double alpha = 0.3 + design;
    for (int point = 0; point < 5; ++point) {
      const Eigen::VectorXd theta = random_vector(rng, d.q(), 0.5);
      const Eigen::VectorXd w = random_vector(rng, d.d(), 0.5);
      Eigen::VectorXd x(d.q() + d.d());
      x << theta, w;
      const auto split = [&](const Eigen::VectorXd& v) {
        return std::make_pair(Eigen::VectorXd(v.head(d.q())), Eigen::VectorXd(v.tail(d.d())));
      };
      const auto f = [&](const Eigen::VectorXd& v) {
        const auto [t, u] = split(v);
        return penalized_partial_loglik(t, u, alpha, d);
      };
      const auto g = [&](const Eigen::VectorXd& v) {
        const auto [t, u] = split(v);
        const auto [gs, gw] = ppl_score(t, u, alpha, d);
        Eigen::VectorXd out(gs.size() + gw.size());
        out << gs, gw;
        return out;
      };
      const Eigen::VectorXd grad = g(x);
      const Eigen::VectorXd fd = oracle::fd_gradient(f, x, 1e-5);
      CHECK((grad - fd).cwiseAbs().maxCoeff() / std::max(1.0, fd.cwiseAbs().maxCoeff()) < 1e-6);
      const Eigen::MatrixXd H = ppl_hessian(theta, w, alpha, d);
      const Eigen::MatrixXd fdH = -oracle::fd_jacobian(g, x, 1e-4);
      CHECK((H - fdH).cwiseAbs().maxCoeff() / std::max(1.0, fdH.cwiseAbs().maxCoeff()) < 1e-5);
      CHECK((H - H.transpose()).cwiseAbs().maxCoeff() == 0.0);
    }
  }
}

TEST_CASE("hessian: single event with a one-subject risk set") {
  const CoxDesign d(records_from({{1.0, 0}, {2.0, 0}, {3.0, 1}}), Eigen::MatrixXd::Random(3, 2),
                    Eigen::MatrixXd(3, 0));
  const double alpha = 0.25;
  const Eigen::MatrixXd H = ppl_hessian(Eigen::VectorXd::Constant(2, 0.3), Eigen::VectorXd::Constant(3, 0.1), alpha, d);
  CHECK(H.topLeftCorner(2, 2).cwiseAbs().maxCoeff() < 1e-15);
  CHECK(H.topRightCorner(2, 3).cwiseAbs().maxCoeff() < 1e-15);
  CHECK((H.bottomRightCorner(3, 3) - Eigen::MatrixXd::Identity(3, 3) / alpha).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("hessian: two-subject design by hand expansion") {
  Eigen::MatrixXd Z(2, 2);
  Z << 0.5, -1.0, 2.0, 0.25;
  const CoxDesign d(records_from({{1.0, 1}, {2.0, 1}}), Z, Eigen::MatrixXd(2, 0));
  Eigen::VectorXd theta(2), w(2);
  theta << 0.4, -0.2;
  w << 0.1, -0.3;
  const double alpha = 0.5;
  const double e1 = std::exp(Z.row(0).dot(theta) + w(0)), e2 = std::exp(Z.row(1).dot(theta) + w(1));
  const double p1 = e1 / (e1 + e2), p2 = e2 / (e1 + e2);
  // Augmented covariates x_j = (Z_j, e_j); only the first risk set has spread.
  Eigen::VectorXd x1(4), x2(4);
  x1 << Z(0, 0), Z(0, 1), 1.0, 0.0;
  x2 << Z(1, 0), Z(1, 1), 0.0, 1.0;
  Eigen::MatrixXd expected = p1 * p2 * (x1 - x2) * (x1 - x2).transpose();
  expected.bottomRightCorner(2, 2) += Eigen::MatrixXd::Identity(2, 2) / alpha;
  CHECK((ppl_hessian(theta, w, alpha, d) - expected).cwiseAbs().maxCoeff() < 1e-14);
}

TEST_CASE("inner_newton: one covariate without frailty matches golden section") {
  CounterRng rng(6);
  const CoxDesign d = oracle::random_design(rng, {60, 1, 0, 0, false, 0.3, 0.8});
  const InnerResult r = inner_newton(d, 1.0, {Eigen::VectorXd::Zero(1), Eigen::VectorXd()}, no_frailty());
  CHECK(r.converged);
  const double g = oracle::golden_max(
      [&](double b) { return partial_loglik(Eigen::VectorXd::Constant(1, b), d); }, -5.0, 5.0);
  CHECK(std::abs(r.theta(0) - g) < 1e-4);
}

TEST_CASE("inner_newton: tiny α reproduces the no-frailty fit") {
  CounterRng rng(7);
  for (int rep = 0; rep < 3; ++rep) {
    const CoxDesign d = oracle::random_design(rng, {40, 2, 1, 0, rep == 1, 0.25, 0.5});
    const FrailtyFit plain = fit(d, no_frailty());
    FrailtyConfig c;
    c.alpha_init = 1e-8;
    c.estimate_alpha = false;
    const FrailtyFit tiny = fit(d, c);
    CHECK(tiny.w_hat.cwiseAbs().maxCoeff() < 1e-4);
    CHECK((tiny.theta() - plain.theta()).cwiseAbs().maxCoeff() < 1e-4);
  }
}

TEST_CASE("inner_newton: accepted steps never decrease the PPL") {
  CounterRng rng(8);
  const CoxDesign d = oracle::random_design(rng, {50, 2, 2, 0, false, 0.3, 1.0});
  double previous = -std::numeric_limits<double>::infinity();
  for (int cap = 1; cap <= 8; ++cap) {
    FrailtyConfig c;
    c.max_inner = cap;
    const InnerResult r = inner_newton(d, 0.7, {Eigen::VectorXd::Zero(d.q()), Eigen::VectorXd::Zero(d.d())}, c);
    CHECK(r.ppl >= previous - 1e-11 * (1.0 + std::abs(previous)));
    previous = r.ppl;
  }
}

TEST_CASE("inner_newton: alternating and joint steps share the fixed point") {
  CounterRng rng(9);
  const CoxDesign d = oracle::random_design(rng, {40, 2, 1, 4, false, 0.3, 0.5});
  FrailtyConfig joint;
  FrailtyConfig alt;
  alt.alternating = true;
  alt.max_inner = 500;
  const auto start = std::make_pair(Eigen::VectorXd::Zero(d.q()).eval(), Eigen::VectorXd::Zero(d.d()).eval());
  const InnerResult a = inner_newton(d, 0.6, start, joint);
  const InnerResult b = inner_newton(d, 0.6, start, alt);
  CHECK(a.converged);
  CHECK(b.converged);
  CHECK((a.theta - b.theta).cwiseAbs().maxCoeff() < 1e-6);
}

TEST_CASE("breslow: null predictor is Nelson–Aalen, random predictor matches a double loop") {
  CounterRng rng(10);
  for (int rep = 0; rep < 5; ++rep) {
    const CoxDesign d = oracle::random_design(rng, {10, 1, 0, 0, rep % 2 == 1, 0.3, 0.5});
    const BaselineHazard na = breslow_cumhaz(d, Eigen::VectorXd::Zero(10));
    const auto [times, loop] = oracle::breslow_double_loop(d.records(), Eigen::VectorXd::Zero(10));
    CHECK(na.times == times);
    CHECK(na.values == oracle::nelson_aalen(d.records(), times));
    const Eigen::VectorXd eta = random_vector(rng, 10, 1.0);
    const BaselineHazard h = breslow_cumhaz(d, eta);
    const auto ref = oracle::breslow_double_loop(d.records(), eta);
    REQUIRE(h.values.size() == ref.second.size());
    for (std::size_t k = 0; k < h.values.size(); ++k) {
      CHECK(h.values[k] == doctest::Approx(ref.second[k]).epsilon(1e-14));
      if (k > 0) CHECK(h.values[k] >= h.values[k - 1]);
    }
    CHECK(h(0.0) == 0.0);
    CHECK(h(h.times.front() - 1e-9) == 0.0);
  }
}

TEST_CASE("breslow: one subject with an event at t = 2") {
  const CoxDesign d(records_from({{2.0, 1}}), Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd(1, 0));
  const BaselineHazard h = breslow_cumhaz(d, Eigen::VectorXd::Constant(1, 0.7));
  CHECK(h(1.999) == 0.0);
  CHECK(h(2.0) == doctest::Approx(std::exp(-0.7)));
  CHECK(h(10.0) == doctest::Approx(std::exp(-0.7)));
}

TEST_CASE("laplace K: unshared diagonal, one-subject value, shared accumulation") {
  CounterRng rng(11);
  const CoxDesign d = oracle::random_design(rng, {12, 2, 0, 0, false, 0.3, 0.5});
  const Eigen::VectorXd theta = random_vector(rng, 2, 0.5), w = random_vector(rng, 12, 0.3);
  const Eigen::VectorXd eta = d.linear_predictor(theta, w);
  const BaselineHazard H = breslow_cumhaz(d, eta);
  const LaplaceMatrix K = laplace_K_matrix(d, theta, w, 0.4, H);
  for (Eigen::Index i = 0; i < 12; ++i) {
    CHECK(K.diagonal()(i) == doctest::Approx(H(d.records()[static_cast<std::size_t>(i)].time) * std::exp(eta(i)) + 2.5));
  }

  const CoxDesign one(records_from({{1.5, 1}}), Eigen::MatrixXd::Zero(1, 1), Eigen::MatrixXd(1, 0));
  const BaselineHazard H1 = breslow_cumhaz(one, Eigen::VectorXd::Zero(1));
  CHECK(laplace_K_matrix(one, Eigen::VectorXd::Zero(1), Eigen::VectorXd::Zero(1), 1.0, H1).diagonal()(0) ==
        doctest::Approx(2.0));

  const CoxDesign shared = oracle::random_design(rng, {9, 1, 0, 3, false, 0.3, 0.5});
  const Eigen::VectorXd ts = random_vector(rng, 1, 0.5), ws = random_vector(rng, 3, 0.5);
  const Eigen::VectorXd es = shared.linear_predictor(ts, ws);
  const BaselineHazard Hs = breslow_cumhaz(shared, es);
  Eigen::MatrixXd brute = Eigen::MatrixXd::Identity(3, 3) / 0.9;
  for (Eigen::Index i = 0; i < 9; ++i) {
    Eigen::VectorXd u = Eigen::VectorXd::Zero(3);
    u(shared.group(i)) = 1.0;
    brute += Hs(shared.records()[static_cast<std::size_t>(i)].time) * std::exp(es(i)) * u * u.transpose();
  }
  const Eigen::MatrixXd lib = Eigen::MatrixXd(laplace_K_matrix(shared, ts, ws, 0.9, Hs).diagonal().asDiagonal());
  CHECK((lib - brute).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("update_alpha: closed-form examples and clamping") {
  LaplaceMatrix K(3);
  K.diagonal().setConstant(4.0);
  CHECK(update_alpha(Eigen::VectorXd::Zero(3), K, 3).alpha == doctest::Approx(0.25));
  LaplaceMatrix K2(2);
  K2.diagonal() << 2.0, 4.0;
  CHECK(update_alpha(Eigen::VectorXd::Ones(2), K2, 2).alpha == doctest::Approx(1.375));
  CHECK(update_alpha(Eigen::VectorXd::Ones(2), Eigen::MatrixXd(K2.diagonal().asDiagonal()), 2).alpha ==
        doctest::Approx(1.375));
  LaplaceMatrix big(1);
  big.diagonal() << 1e12;
  const AlphaUpdate low = update_alpha(Eigen::VectorXd::Zero(1), big, 1);
  CHECK(low.clamped);
  CHECK(low.alpha == kAlphaMin);
}

TEST_CASE("fit: refuses data without events") {
  const CoxDesign d(records_from({{1.0, 0}, {2.0, 0}, {3.0, 0}}), Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd(3, 0));
  CHECK_THROWS_AS(fit(d, FrailtyConfig{}), InputError);
}

TEST_CASE("fit: two-covariate design against derivative-free maximization") {
  CounterRng rng(12);
  const CoxDesign plain_design = oracle::random_design(rng, {100, 2, 0, 0, false, 0.3, 0.6});
  const FrailtyFit plain = fit(plain_design, no_frailty());
  const Eigen::VectorXd nm = oracle::nelder_mead_max(
      [&](const Eigen::VectorXd& t) { return partial_loglik(t, plain_design); }, Eigen::VectorXd::Zero(2));
  CHECK((plain.theta() - nm).cwiseAbs().maxCoeff() < 1e-3);

  // Shared frailty keeps the joint (θ, w) search small enough for the simplex.
  const CoxDesign shared = oracle::random_design(rng, {100, 2, 0, 4, false, 0.3, 0.6});
  const FrailtyFit ff = fit(shared, FrailtyConfig{});
  const double alpha = ff.alpha_hat;
  const Eigen::VectorXd nm2 = oracle::nelder_mead_max(
      [&](const Eigen::VectorXd& x) {
        return penalized_partial_loglik(x.head(2), x.tail(4), alpha, shared);
      },
      Eigen::VectorXd::Zero(6));
  CHECK((ff.theta() - nm2.head(2)).cwiseAbs().maxCoeff() < 1e-3);
  CHECK((ff.w_hat - nm2.tail(4)).cwiseAbs().maxCoeff() < 1e-3);
}

TEST_CASE("fit: α fixed point agrees with a profile-likelihood grid search") {
  CounterRng rng(13);
  SimConfig sc;
  sc.n = 500;
  sc.phi = 1.0;
  std::vector<double> alphas;
  for (int seed = 0; seed < 2; ++seed) {
    CounterRng stream = CounterRng::substream(100 + static_cast<std::uint64_t>(seed), {0});
    const SimulatedDataset ds = simulate_dataset(sc.n, sc, TruthSpec{}, stream);
    const PipelineResult pr = run_pipeline(ds.data, sc.pipeline);
    REQUIRE(pr.fit.diagnostics.converged);
    const double a_hat = pr.fit.alpha_hat;
    CHECK(a_hat > 0.0);
    alphas.push_back(a_hat);

    // Profile in α with (θ, w) held at the converged PPL maximizers; only the
    // 1/α contributions to V and K move along the grid.
    const CoxDesign& d = pr.design;
    const BaselineHazard H = breslow_cumhaz(d, d.linear_predictor(pr.fit.theta(), pr.fit.w_hat));
    const Eigen::VectorXd data_part =
        laplace_K_matrix(d, pr.fit.theta(), pr.fit.w_hat, a_hat, H).diagonal().array() - 1.0 / a_hat;
    double best = -std::numeric_limits<double>::infinity(), best_alpha = 0.0;
    for (int g = 0; g <= 120; ++g) {
      const double alpha = 0.01 * std::pow(500.0, g / 120.0);
      const LaplaceMatrix K((data_part.array() + 1.0 / alpha).matrix());
      const double prof = approximate_profile_loglik(pr.fit.w_hat, K, alpha);
      if (prof > best) {
        best = prof;
        best_alpha = alpha;
      }
    }
    MESSAGE("α̂ = " << a_hat << ", grid maximizer = " << best_alpha);
    CHECK(std::abs(best_alpha - a_hat) < 0.2 * a_hat);
  }
  CHECK(std::abs(alphas[0] - alphas[1]) < 0.5 * std::max(alphas[0], alphas[1]));
}

TEST_CASE("predict_risk: zero covariates and in-sample consistency") {
  CounterRng rng(14);
  const CoxDesign d = oracle::random_design(rng, {30, 2, 1, 0, false, 0.3, 0.5});
  const FrailtyFit f = fit(d, FrailtyConfig{});
  CHECK(predict_risk(f, Eigen::MatrixXd::Zero(4, 2), Eigen::MatrixXd::Zero(4, 1), false).isZero(0.0));
  std::vector<Eigen::Index> groups;
  for (Eigen::Index i = 0; i < 30; ++i) groups.push_back(d.group(i));
  CHECK(predict_risk(f, d.Z(), d.scores(), true, groups) == d.linear_predictor(f.theta(), f.w_hat));
  CHECK_THROWS_AS(predict_risk(f, d.Z(), d.scores(), true), InputError);
  CHECK_THROWS_AS(predict_risk(f, Eigen::MatrixXd::Zero(4, 3), Eigen::MatrixXd::Zero(4, 1), false), InputError);
}

TEST_CASE("invariants: location shift of η") {
  CounterRng rng(15);
  const CoxDesign d = oracle::random_design(rng, {30, 2, 1, 0, true, 0.3, 0.5});
  const Eigen::VectorXd theta = random_vector(rng, 3, 0.5), w = random_vector(rng, 30, 0.4);
  const double c = 3.7;
  const Eigen::VectorXd shifted = w.array() + c;
  const double a = penalized_partial_loglik(theta, w, 0.5, d) + w.squaredNorm() / 1.0;
  const double b = penalized_partial_loglik(theta, shifted, 0.5, d) + shifted.squaredNorm() / 1.0;
  CHECK(std::abs(a - b) < 1e-10);
  CHECK((ppl_score(theta, w, 0.5, d).first - ppl_score(theta, shifted, 0.5, d).first).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("invariants: rescaling covariates leaves η and concordance unchanged") {
  CounterRng rng(16);
  const CoxDesign d = oracle::random_design(rng, {80, 2, 1, 0, false, 0.3, 0.7});
  const CoxDesign scaled(d.records(), 10.0 * d.Z(), 10.0 * d.scores());
  const FrailtyFit a = fit(d, FrailtyConfig{});
  const FrailtyFit b = fit(scaled, FrailtyConfig{});
  CHECK((a.theta() - 10.0 * b.theta()).cwiseAbs().maxCoeff() < 1e-5);
  const Eigen::VectorXd ea = predict_risk(a, d.Z(), d.scores(), false);
  const Eigen::VectorXd eb = predict_risk(b, scaled.Z(), scaled.scores(), false);
  CHECK((ea - eb).cwiseAbs().maxCoeff() < 1e-5);
  CHECK(concordance(d.records(), ea) == concordance(d.records(), eb));
}

TEST_CASE("design: validation and rank detection") {
  Eigen::MatrixXd Z(4, 2);
  Z << 1, 2, 2, 4, 3, 6, 4, 8;
  const CoxDesign d(records_from({{1, 1}, {2, 0}, {3, 1}, {4, 1}}), Z, Eigen::MatrixXd(4, 0));
  CHECK_FALSE(d.full_rank());
  CHECK_THROWS_AS(CoxDesign(records_from({{-1, 1}, {2, 1}}), Eigen::MatrixXd::Ones(2, 1), Eigen::MatrixXd(2, 0)),
                  InputError);
  auto recs = records_from({{1, 1}, {2, 1}, {3, 1}});
  recs[0].group = 0;
  recs[1].group = 0;
  recs[2].group = 2;
  CHECK_THROWS_AS(CoxDesign(recs, Eigen::MatrixXd::Ones(3, 1), Eigen::MatrixXd(3, 0), 3), InputError);
  FrailtyConfig bad;
  bad.tol_inner = 0.0;
  CHECK_THROWS_AS(bad.validate(), InputError);
}

TEST_CASE("fit: inner Newton converges quickly on study data (n = 250, φ = 1)") {
  SimConfig sc;
  sc.n = 250;
  sc.phi = 1.0;
  sc.replications = 100;
  sc.compare_no_frailty = false;
  const StudyResult study = run_study(StudyGrid{{250}, {0.01}, {1.0}}, sc, 4);
  int fast = 0;
  for (const auto& r : study.cells[0].replicates) fast += (!r.failed && r.max_inner_iterations <= 25) ? 1 : 0;
  CHECK(fast >= 95);
}
