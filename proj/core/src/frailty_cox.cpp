#include "flcrmf/frailty_cox.hpp"

#include <Eigen/Cholesky>
#include <Eigen/QR>
#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

#include "flcrmf/error.hpp"

namespace flcrmf {

// ---------------------------------------------------------------------------
// Risk sets and design
// ---------------------------------------------------------------------------

RiskSetIndex::RiskSetIndex(const std::vector<SurvivalRecord>& records) {
  const auto n = static_cast<Eigen::Index>(records.size());
  order_.resize(records.size());
  std::iota(order_.begin(), order_.end(), Eigen::Index{0});
  std::stable_sort(order_.begin(), order_.end(), [&](Eigen::Index a, Eigen::Index b) {
    return records[static_cast<std::size_t>(a)].time < records[static_cast<std::size_t>(b)].time;
  });

  Eigen::Index pos = 0;
  while (pos < n) {
    const double t = records[static_cast<std::size_t>(order_[static_cast<std::size_t>(pos)])].time;
    Eigen::Index end = pos;
    int events = 0;
    while (end < n && records[static_cast<std::size_t>(order_[static_cast<std::size_t>(end)])].time == t) {
      events += records[static_cast<std::size_t>(order_[static_cast<std::size_t>(end)])].status;
      ++end;
    }
    if (events > 0) {
      event_times_.push_back(t);
      event_counts_.push_back(events);
      risk_start_.push_back(pos);
    }
    pos = end;
  }

  event_slot_.assign(records.size(), 0);
  std::size_t slot = 0;
  for (Eigen::Index a = 0; a < n; ++a) {
    const auto subject = static_cast<std::size_t>(order_[static_cast<std::size_t>(a)]);
    while (slot < event_times_.size() && event_times_[slot] <= records[subject].time) ++slot;
    event_slot_[subject] = static_cast<Eigen::Index>(slot);
  }
}

Eigen::Index RiskSetIndex::risk_set_size(std::size_t k) const {
  return static_cast<Eigen::Index>(order_.size()) - risk_start_[k];
}

CoxDesign::CoxDesign(std::vector<SurvivalRecord> records, Eigen::MatrixXd Z,
                     Eigen::MatrixXd scores)
    : records_(std::move(records)), Z_(std::move(Z)), scores_(std::move(scores)),
      n_groups_(static_cast<Eigen::Index>(records_.size())), risk_(records_) {
  for (std::size_t i = 0; i < records_.size(); ++i) records_[i].group = static_cast<Eigen::Index>(i);
  validate();
}

CoxDesign::CoxDesign(std::vector<SurvivalRecord> records, Eigen::MatrixXd Z,
                     Eigen::MatrixXd scores, Eigen::Index n_groups)
    : records_(std::move(records)), Z_(std::move(Z)), scores_(std::move(scores)),
      n_groups_(n_groups), risk_(records_) {
  validate();
}

void CoxDesign::validate() {
  const Eigen::Index n = this->n();
  if (n < 1) throw InputError("design has no subjects");
  if (Z_.rows() == 0 && Z_.cols() == 0) Z_.resize(n, 0);
  if (scores_.rows() == 0 && scores_.cols() == 0) scores_.resize(n, 0);
  if (Z_.rows() != n) throw InputError("Z has " + std::to_string(Z_.rows()) + " rows, expected " + std::to_string(n));
  if (scores_.rows() != n) throw InputError("score matrix row count does not match subjects");
  if (!Z_.allFinite() || !scores_.allFinite()) throw InputError("design contains non-finite covariates");
  for (std::size_t i = 0; i < records_.size(); ++i) {
    const auto& r = records_[i];
    if (!(r.time > 0.0) || !std::isfinite(r.time)) {
      throw InputError("subject " + std::to_string(i) + ": observed time must be positive and finite");
    }
    if (r.status != 0 && r.status != 1) throw InputError("subject " + std::to_string(i) + ": status must be 0 or 1");
  }
  if (n_groups_ < 1) throw InputError("number of frailty groups must be positive");
  std::vector<int> seen(static_cast<std::size_t>(n_groups_), 0);
  for (const auto& r : records_) {
    if (r.group < 0 || r.group >= n_groups_) throw InputError("frailty group index out of range");
    seen[static_cast<std::size_t>(r.group)] = 1;
  }
  if (std::find(seen.begin(), seen.end(), 0) != seen.end()) {
    throw InputError("every frailty group must contain at least one subject");
  }
  D_.resize(n, Z_.cols() + scores_.cols());
  D_ << Z_, scores_;
  if (D_.cols() > 0) {
    const Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(D_);
    full_rank_ = qr.rank() == D_.cols();
  }
}

Eigen::Index CoxDesign::n_events() const {
  Eigen::Index e = 0;
  for (const auto& r : records_) e += r.status;
  return e;
}

Eigen::VectorXd CoxDesign::linear_predictor(const Eigen::VectorXd& theta,
                                            const Eigen::VectorXd& w) const {
  if (theta.size() != q()) throw InputError("θ has wrong length");
  Eigen::VectorXd eta = D_ * theta;
  if (w.size() > 0) {
    if (w.size() != d()) throw InputError("w has wrong length");
    for (Eigen::Index i = 0; i < n(); ++i) eta(i) += w(group(i));
  }
  return eta;
}

void FrailtyConfig::validate() const {
  if (!(alpha_init > 0.0)) throw InputError("alpha_init must be positive");
  if (!(tol_inner > 0.0) || !(tol_outer > 0.0)) throw InputError("tolerances must be positive");
  if (max_inner < 1 || max_outer < 1) throw InputError("iteration caps must be at least 1");
  if (step_halving_max < 0) throw InputError("step_halving_max must be nonnegative");
}

double BaselineHazard::operator()(double t) const {
  const auto it = std::upper_bound(times.begin(), times.end(), t);
  if (it == times.begin()) return 0.0;
  return values[static_cast<std::size_t>(it - times.begin() - 1)];
}

Eigen::VectorXd FrailtyFit::theta() const {
  Eigen::VectorXd t(gamma_hat.size() + beta_coef_hat.size());
  t << gamma_hat, beta_coef_hat;
  return t;
}

// ---------------------------------------------------------------------------
// Partial-likelihood accumulators
// ---------------------------------------------------------------------------

namespace {

/// Risk-set sums at a given linear predictor, scaled by exp(-max η).
struct Accumulators {
  double shift = 0.0;
  Eigen::VectorXd r;             ///< exp(η_j - shift)
  std::vector<double> s0;        ///< Σ_{R(t_k)} r
  std::vector<double> c1;        ///< Σ_{k' <= k} d_k' / s0_k'
  std::vector<double> c2;        ///< Σ_{k' <= k} d_k' / s0_k'²
  Eigen::VectorXd expected;      ///< r_j · c1(slot_j) = e^{η_j} Ĥ₀(T̃_j)
  double loglik = 0.0;           ///< unpenalized partial log-likelihood
};

Accumulators accumulate(const CoxDesign& design, const Eigen::VectorXd& eta) {
  if (!eta.allFinite()) throw NumericalError("linear predictor is not finite");
  const RiskSetIndex& rs = design.risk_sets();
  const Eigen::Index n = design.n();
  Accumulators acc;
  acc.shift = eta.maxCoeff();
  acc.r = (eta.array() - acc.shift).exp().matrix();

  std::vector<double> suffix(static_cast<std::size_t>(n) + 1, 0.0);
  const auto& order = rs.order();
  for (Eigen::Index a = n - 1; a >= 0; --a) {
    suffix[static_cast<std::size_t>(a)] =
        suffix[static_cast<std::size_t>(a) + 1] + acc.r(order[static_cast<std::size_t>(a)]);
  }

  const std::size_t m = rs.n_event_times();
  acc.s0.resize(m);
  acc.c1.resize(m);
  acc.c2.resize(m);
  double c1 = 0.0;
  double c2 = 0.0;
  double log_denominators = 0.0;
  for (std::size_t k = 0; k < m; ++k) {
    const double s0 = suffix[static_cast<std::size_t>(rs.risk_start()[k])];
    const double dk = rs.event_counts()[k];
    acc.s0[k] = s0;
    c1 += dk / s0;
    c2 += dk / (s0 * s0);
    acc.c1[k] = c1;
    acc.c2[k] = c2;
    log_denominators += dk * (std::log(s0) + acc.shift);
  }

  double event_sum = 0.0;
  acc.expected.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto& rec = design.records()[static_cast<std::size_t>(i)];
    if (rec.status == 1) event_sum += eta(i);
    const Eigen::Index slot = rs.event_slot()[static_cast<std::size_t>(i)];
    acc.expected(i) = slot > 0 ? acc.r(i) * acc.c1[static_cast<std::size_t>(slot - 1)] : 0.0;
  }
  acc.loglik = event_sum - log_denominators;
  if (!std::isfinite(acc.loglik)) throw NumericalError("partial likelihood diverged");
  return acc;
}

Eigen::VectorXd residuals(const CoxDesign& design, const Accumulators& acc) {
  Eigen::VectorXd res(design.n());
  for (Eigen::Index i = 0; i < design.n(); ++i) {
    res(i) = design.records()[static_cast<std::size_t>(i)].status - acc.expected(i);
  }
  return res;
}

/// Subject-level information M with Xᵀ M X the partial-likelihood information
/// for any covariate matrix X.
Eigen::MatrixXd subject_information(const CoxDesign& design, const Accumulators& acc) {
  const Eigen::Index n = design.n();
  const RiskSetIndex& rs = design.risk_sets();
  const auto& order = rs.order();
  Eigen::MatrixXd M(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    const Eigen::Index ja = order[static_cast<std::size_t>(a)];
    const Eigen::Index slot = rs.event_slot()[static_cast<std::size_t>(ja)];
    const double c2 = slot > 0 ? acc.c2[static_cast<std::size_t>(slot - 1)] : 0.0;
    const double va = acc.r(ja) * c2;
    M(ja, ja) = acc.expected(ja) - va * acc.r(ja);
    for (Eigen::Index b = a + 1; b < n; ++b) {
      const Eigen::Index jb = order[static_cast<std::size_t>(b)];
      const double value = -va * acc.r(jb);
      M(ja, jb) = value;
      M(jb, ja) = value;
    }
  }
  return M;
}

bool identity_incidence(const CoxDesign& design) {
  if (design.d() != design.n()) return false;
  for (Eigen::Index i = 0; i < design.n(); ++i) {
    if (design.group(i) != i) return false;
  }
  return true;
}

/// Negative Hessian blocks; `with_frailty` adds the w rows/columns.
// Averaging with the transpose makes the result bitwise symmetric.
Eigen::MatrixXd symmetrized(const Eigen::MatrixXd& A) { return 0.5 * (A + A.transpose()); }

Eigen::MatrixXd information(const CoxDesign& design, const Accumulators& acc, double alpha,
                            bool with_frailty) {
  const Eigen::Index q = design.q();
  const Eigen::Index d = with_frailty ? design.d() : 0;
  const Eigen::MatrixXd M = subject_information(design, acc);
  const Eigen::MatrixXd MD = M * design.D();
  Eigen::MatrixXd info = Eigen::MatrixXd::Zero(q + d, q + d);
  info.topLeftCorner(q, q).noalias() = design.D().transpose() * MD;
  if (!with_frailty) return symmetrized(info);

  if (identity_incidence(design)) {
    info.block(q, 0, d, q) = MD;
    info.bottomRightCorner(d, d) = M;
  } else {
    const Eigen::Index n = design.n();
    for (Eigen::Index j = 0; j < n; ++j) info.block(q + design.group(j), 0, 1, q) += MD.row(j);
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::Index gj = design.group(j);
      for (Eigen::Index k = 0; k < n; ++k) info(q + gj, q + design.group(k)) += M(j, k);
    }
  }
  info.block(0, q, q, d) = info.block(q, 0, d, q).transpose();
  info.bottomRightCorner(d, d).diagonal().array() += 1.0 / alpha;
  return symmetrized(info);
}

Eigen::VectorXd group_sums(const CoxDesign& design, const Eigen::VectorXd& subject_values) {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(design.d());
  for (Eigen::Index i = 0; i < design.n(); ++i) out(design.group(i)) += subject_values(i);
  return out;
}

void check_alpha(double alpha) {
  if (!(alpha > 0.0) || !std::isfinite(alpha)) throw InputError("frailty variance α must be positive");
}

void check_dims(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, const CoxDesign& design) {
  if (theta.size() != design.q()) {
    throw InputError("θ has length " + std::to_string(theta.size()) + ", expected " +
                     std::to_string(design.q()));
  }
  if (w.size() != design.d()) {
    throw InputError("w has length " + std::to_string(w.size()) + ", expected " +
                     std::to_string(design.d()));
  }
}

/// Objective and first/second derivatives at one point.
struct Evaluation {
  double value = 0.0;
  Eigen::VectorXd score;  ///< (θ, w) stacked; w part absent without frailty
  Eigen::MatrixXd info;
};

double objective(const CoxDesign& design, const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                 double alpha, bool with_frailty) {
  const Eigen::VectorXd eta = design.linear_predictor(theta, with_frailty ? w : Eigen::VectorXd());
  double value = accumulate(design, eta).loglik;
  if (with_frailty) value -= w.squaredNorm() / (2.0 * alpha);
  return value;
}

Eigen::VectorXd gradient(const CoxDesign& design, const Accumulators& acc, const Eigen::VectorXd& w,
                         double alpha, bool with_frailty) {
  const Eigen::VectorXd res = residuals(design, acc);
  const Eigen::Index q = design.q();
  const Eigen::Index d = with_frailty ? design.d() : 0;
  Eigen::VectorXd g(q + d);
  g.head(q) = design.D().transpose() * res;
  if (with_frailty) g.tail(d) = group_sums(design, res) - w / alpha;
  return g;
}

Evaluation evaluate(const CoxDesign& design, const Eigen::VectorXd& theta,
                    const Eigen::VectorXd& w, double alpha, bool with_frailty) {
  const Eigen::VectorXd eta = design.linear_predictor(theta, with_frailty ? w : Eigen::VectorXd());
  const Accumulators acc = accumulate(design, eta);
  Evaluation ev;
  ev.value = acc.loglik - (with_frailty ? w.squaredNorm() / (2.0 * alpha) : 0.0);
  ev.score = gradient(design, acc, w, alpha, with_frailty);
  ev.info = information(design, acc, alpha, with_frailty);
  return ev;
}

/// Solves info·x = rhs, escalating a diagonal ridge from 1e-10 if the
/// Cholesky factorization fails.
Eigen::VectorXd solve_newton(const Eigen::MatrixXd& info, const Eigen::VectorXd& rhs) {
  const double scale = std::max(1.0, info.diagonal().cwiseAbs().maxCoeff());
  Eigen::LLT<Eigen::MatrixXd> llt(info);
  double ridge = 1e-10;
  while (llt.info() != Eigen::Success) {
    if (ridge > 1e-4) {
      throw NumericalError("information matrix is not positive definite: collinear design");
    }
    Eigen::MatrixXd shifted = info;
    shifted.diagonal().array() += ridge * scale;
    llt.compute(shifted);
    ridge *= 10.0;
  }
  return llt.solve(rhs);
}

bool accept_step(double candidate, double current) {
  return std::isfinite(candidate) && candidate >= current - 1e-11 * (1.0 + std::abs(current));
}

}  // namespace

// ---------------------------------------------------------------------------
// Objective and derivatives
// ---------------------------------------------------------------------------

double penalized_partial_loglik(const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                double alpha, const CoxDesign& design) {
  check_alpha(alpha);
  check_dims(theta, w, design);
  return objective(design, theta, w, alpha, true);
}

double partial_loglik(const Eigen::VectorXd& theta, const CoxDesign& design) {
  if (theta.size() != design.q()) throw InputError("θ has wrong length");
  return objective(design, theta, Eigen::VectorXd(), 1.0, false);
}

std::pair<Eigen::VectorXd, Eigen::VectorXd> ppl_score(const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& w, double alpha,
                                                      const CoxDesign& design) {
  check_alpha(alpha);
  check_dims(theta, w, design);
  const Accumulators acc = accumulate(design, design.linear_predictor(theta, w));
  const Eigen::VectorXd g = gradient(design, acc, w, alpha, true);
  return {g.head(design.q()), g.tail(design.d())};
}

Eigen::MatrixXd ppl_hessian(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, double alpha,
                            const CoxDesign& design) {
  check_alpha(alpha);
  check_dims(theta, w, design);
  const Accumulators acc = accumulate(design, design.linear_predictor(theta, w));
  return information(design, acc, alpha, true);
}

// ---------------------------------------------------------------------------
// Newton iterations
// ---------------------------------------------------------------------------

namespace {

/// One Newton step restricted to the coordinates in [offset, offset + len)
/// of the stacked (θ, w) vector, with step halving. Returns false when no
/// step could be accepted.
bool newton_step(const CoxDesign& design, double alpha, bool with_frailty, Eigen::VectorXd& x,
                 Evaluation& ev, Eigen::Index offset, Eigen::Index len, int halving_max) {
  const Eigen::Index q = design.q();
  const Eigen::VectorXd direction =
      solve_newton(ev.info.block(offset, offset, len, len), ev.score.segment(offset, len));
  double step = 1.0;
  for (int h = 0; h <= halving_max; ++h, step *= 0.5) {
    Eigen::VectorXd candidate = x;
    candidate.segment(offset, len) += step * direction;
    const Eigen::VectorXd theta = candidate.head(q);
    const Eigen::VectorXd w = with_frailty ? Eigen::VectorXd(candidate.tail(design.d())) : Eigen::VectorXd();
    double value = -std::numeric_limits<double>::infinity();
    try {
      value = objective(design, theta, w, alpha, with_frailty);
    } catch (const NumericalError&) {
      continue;
    }
    if (accept_step(value, ev.value)) {
      x = std::move(candidate);
      ev = evaluate(design, theta, w, alpha, with_frailty);
      return true;
    }
  }
  return false;
}

double sup_norm(const Eigen::VectorXd& v) { return v.size() ? v.cwiseAbs().maxCoeff() : 0.0; }

}  // namespace

InnerResult inner_newton(const CoxDesign& design, double alpha,
                         const std::pair<Eigen::VectorXd, Eigen::VectorXd>& start,
                         const FrailtyConfig& config) {
  config.validate();
  const bool with_frailty = config.frailty_enabled;
  if (with_frailty) check_alpha(alpha);
  const Eigen::Index q = design.q();
  const Eigen::Index d = with_frailty ? design.d() : 0;
  if (start.first.size() != q) throw InputError("start θ has wrong length");
  if (with_frailty && start.second.size() != d) throw InputError("start w has wrong length");
  if (!start.first.allFinite() || (with_frailty && !start.second.allFinite())) {
    throw InputError("Newton start point is not finite");
  }

  Eigen::VectorXd x(q + d);
  x.head(q) = start.first;
  if (with_frailty) x.tail(d) = start.second;
  const auto w_of = [&](const Eigen::VectorXd& v) {
    return with_frailty ? Eigen::VectorXd(v.tail(d)) : Eigen::VectorXd();
  };
  Evaluation ev = evaluate(design, x.head(q), w_of(x), alpha, with_frailty);

  InnerResult out;
  const auto norms = [&]() {
    out.score_theta_norm = sup_norm(ev.score.head(q));
    out.score_w_norm = with_frailty ? sup_norm(ev.score.tail(d)) : 0.0;
    return std::max(out.score_theta_norm, out.score_w_norm);
  };

  for (int it = 0; it < config.max_inner; ++it) {
    if (norms() < config.tol_inner) {
      out.converged = true;
      break;
    }
    bool moved = false;
    if (config.alternating && with_frailty) {
      if (q > 0) moved |= newton_step(design, alpha, true, x, ev, 0, q, config.step_halving_max);
      moved |= newton_step(design, alpha, true, x, ev, q, d, config.step_halving_max);
    } else {
      moved = newton_step(design, alpha, with_frailty, x, ev, 0, q + d, config.step_halving_max);
    }
    ++out.iterations;
    if (!moved) break;
  }
  if (!out.converged) out.converged = norms() < config.tol_inner;

  out.theta = x.head(q);
  out.w = w_of(x);
  out.ppl = ev.value;
  return out;
}

// ---------------------------------------------------------------------------
// Baseline hazard, Laplace curvature and α
// ---------------------------------------------------------------------------

BaselineHazard breslow_cumhaz(const CoxDesign& design, const Eigen::VectorXd& eta) {
  if (eta.size() != design.n()) throw InputError("η length does not match design");
  const Accumulators acc = accumulate(design, eta);
  const RiskSetIndex& rs = design.risk_sets();
  BaselineHazard H;
  H.times = rs.event_times();
  H.values.resize(rs.n_event_times());
  double cumulative = 0.0;
  for (std::size_t k = 0; k < rs.n_event_times(); ++k) {
    if (!(acc.s0[k] > 0.0)) throw NumericalError("empty risk set at an event time");
    const double d = static_cast<double>(rs.event_counts()[k]);
    double jump = d / acc.s0[k] * std::exp(-acc.shift);
    if (!std::isfinite(jump) || jump == 0.0) jump = std::exp(std::log(d) - std::log(acc.s0[k]) - acc.shift);
    cumulative += jump;
    H.values[k] = cumulative;
  }
  return H;
}

LaplaceMatrix laplace_K_matrix(const CoxDesign& design, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& w, double alpha, const BaselineHazard& H0) {
  check_alpha(alpha);
  check_dims(theta, w, design);
  const Eigen::VectorXd eta = design.linear_predictor(theta, w);
  Eigen::VectorXd diag = Eigen::VectorXd::Constant(design.d(), 1.0 / alpha);
  for (Eigen::Index i = 0; i < design.n(); ++i) {
    diag(design.group(i)) += H0(design.records()[static_cast<std::size_t>(i)].time) * std::exp(eta(i));
  }
  if (!diag.allFinite() || (diag.array() <= 0.0).any()) {
    throw NumericalError("Laplace curvature matrix is not positive definite");
  }
  return LaplaceMatrix(diag);
}

namespace {

AlphaUpdate clamp_alpha(double raw) {
  if (!std::isfinite(raw)) throw NumericalError("α update is not finite");
  AlphaUpdate out;
  out.alpha = std::clamp(raw, kAlphaMin, kAlphaMax);
  out.clamped = out.alpha != raw;
  return out;
}

}  // namespace

AlphaUpdate update_alpha(const Eigen::VectorXd& w_hat, const LaplaceMatrix& K, Eigen::Index d) {
  if (d < 1 || K.rows() != d) throw InputError("Laplace matrix dimension does not match d");
  if ((K.diagonal().array() <= 0.0).any()) throw NumericalError("Laplace matrix is not invertible");
  const double trace_inv = K.diagonal().cwiseInverse().sum();
  return clamp_alpha((w_hat.squaredNorm() + trace_inv) / static_cast<double>(d));
}

AlphaUpdate update_alpha(const Eigen::VectorXd& w_hat, const Eigen::MatrixXd& K, Eigen::Index d) {
  if (d < 1 || K.rows() != d || K.cols() != d) throw InputError("Laplace matrix dimension does not match d");
  const Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) throw NumericalError("Laplace matrix is not invertible");
  const double trace_inv = llt.solve(Eigen::MatrixXd::Identity(d, d)).trace();
  return clamp_alpha((w_hat.squaredNorm() + trace_inv) / static_cast<double>(d));
}

double approximate_profile_loglik(const Eigen::VectorXd& w_hat, const LaplaceMatrix& K,
                                  double alpha) {
  check_alpha(alpha);
  const auto d = static_cast<double>(K.rows());
  return -0.5 * d * std::log(alpha) - 0.5 * K.diagonal().array().log().sum() -
         0.5 * w_hat.squaredNorm() / alpha;
}

// ---------------------------------------------------------------------------
// Full fit
// ---------------------------------------------------------------------------

FrailtyFit fit(const CoxDesign& design, const FrailtyConfig& config) {
  config.validate();
  if (design.n_events() == 0) throw InputError("no events in the data: partial likelihood is empty");

  const Eigen::Index q = design.q();
  const Eigen::Index p = design.p();
  FrailtyFit result;
  result.frailty_enabled = config.frailty_enabled;
  FitDiagnostics& diag = result.diagnostics;

  Eigen::VectorXd theta = Eigen::VectorXd::Zero(q);
  Eigen::VectorXd w = config.frailty_enabled ? Eigen::VectorXd::Zero(design.d()) : Eigen::VectorXd();
  InnerResult inner;

  if (!config.frailty_enabled || !config.estimate_alpha) {
    inner = inner_newton(design, config.alpha_init, {theta, w}, config);
    diag.inner_iterations.push_back(inner.iterations);
    diag.outer_iterations = 1;
    diag.converged = inner.converged;
    result.alpha_hat = config.frailty_enabled ? config.alpha_init : 0.0;
  } else {
    // The plain update α ← g(α) contracts very slowly when its slope at the
    // fixed point is near 1. With acceleration on, the root of
    // r(x) = log g(eˣ) − x is chased by secant steps in x = log α, falling back
    // to the plain update whenever the secant slope is not negative.
    double alpha = config.alpha_init;
    bool outer_converged = false;
    bool have_previous = false;
    double x_prev = 0.0;
    double r_prev = 0.0;
    const double x_min = std::log(kAlphaMin);
    const double x_max = std::log(kAlphaMax);
    for (int outer = 0; outer < config.max_outer; ++outer) {
      inner = inner_newton(design, alpha, {theta, w}, config);
      theta = inner.theta;
      w = inner.w;
      diag.inner_iterations.push_back(inner.iterations);
      diag.outer_iterations = outer + 1;

      const BaselineHazard H0 = breslow_cumhaz(design, design.linear_predictor(theta, w));
      const LaplaceMatrix K = laplace_K_matrix(design, theta, w, alpha, H0);
      const AlphaUpdate update = update_alpha(w, K, design.d());
      diag.alpha_clamped = diag.alpha_clamped || update.clamped;
      diag.last_alpha_change = std::abs(update.alpha - alpha);
      if (diag.last_alpha_change < config.tol_outer * (1.0 + alpha)) {
        alpha = update.alpha;
        outer_converged = true;
        break;
      }

      const double x = std::log(alpha);
      const double r = std::log(update.alpha) - x;
      double x_next = std::log(update.alpha);
      if (config.accelerate_alpha && have_previous && x != x_prev) {
        const double slope = (r - r_prev) / (x - x_prev);
        if (slope < 0.0 && std::isfinite(slope)) {
          x_next = x + std::clamp(-r / slope, -2.0, 2.0);
        }
      }
      x_prev = x;
      r_prev = r;
      have_previous = true;
      alpha = std::exp(std::clamp(x_next, x_min, x_max));
    }
    // Re-solve at the final α so (θ̂, ŵ) are the PPL maximizers at α̂.
    inner = inner_newton(design, alpha, {theta, w}, config);
    diag.inner_iterations.push_back(inner.iterations);
    diag.converged = outer_converged && inner.converged;
    result.alpha_hat = alpha;
  }

  theta = inner.theta;
  w = inner.w;
  diag.inner_converged = inner.converged;
  diag.final_ppl = inner.ppl;
  diag.score_theta_norm = inner.score_theta_norm;
  diag.score_w_norm = inner.score_w_norm;

  result.gamma_hat = theta.head(p);
  result.beta_coef_hat = theta.tail(q - p);
  result.w_hat = w;
  result.baseline = breslow_cumhaz(design, design.linear_predictor(theta, w));
  return result;
}

Eigen::VectorXd predict_risk(const FrailtyFit& fit, const Eigen::MatrixXd& Z_new,
                             const Eigen::MatrixXd& scores_new, bool include_frailty,
                             const std::vector<Eigen::Index>& groups) {
  if (Z_new.cols() != fit.gamma_hat.size()) throw InputError("Z_new column count does not match γ̂");
  if (scores_new.cols() != fit.beta_coef_hat.size()) {
    throw InputError("score column count does not match β̂");
  }
  if (Z_new.rows() != scores_new.rows()) throw InputError("Z_new and scores_new row counts differ");
  // Same product as CoxDesign::linear_predictor so in-sample η is reproduced bit for bit.
  Eigen::MatrixXd D(Z_new.rows(), Z_new.cols() + scores_new.cols());
  D << Z_new, scores_new;
  Eigen::VectorXd eta = D * fit.theta();
  if (include_frailty) {
    if (fit.w_hat.size() == 0) throw InputError("fit has no frailty estimates");
    if (static_cast<Eigen::Index>(groups.size()) != eta.size()) {
      throw InputError("group membership required to include frailty");
    }
    for (Eigen::Index i = 0; i < eta.size(); ++i) {
      const Eigen::Index g = groups[static_cast<std::size_t>(i)];
      if (g < 0 || g >= fit.w_hat.size()) throw InputError("group index out of range");
      eta(i) += fit.w_hat(g);
    }
  }
  return eta;
}

}  // namespace flcrmf
