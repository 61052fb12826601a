#pragma once

#include <Eigen/Core>
#include <utility>
#include <vector>

namespace flcrmf {

/// One subject's observed survival outcome. `group` is the 0-based index of
/// the frailty group the subject belongs to.
struct SurvivalRecord {
  double time = 0.0;
  int status = 0;
  Eigen::Index group = 0;
};

/// Distinct event times in ascending order together with the risk-set
/// structure needed by the partial likelihood. Risk sets use Breslow's
/// convention: every subject with observed time >= t is at risk at t.
class RiskSetIndex {
 public:
  explicit RiskSetIndex(const std::vector<SurvivalRecord>& records);

  /// Subject indices sorted by ascending observed time (stable in index).
  const std::vector<Eigen::Index>& order() const { return order_; }
  const std::vector<double>& event_times() const { return event_times_; }
  const std::vector<int>& event_counts() const { return event_counts_; }
  /// Position in order() of the first subject at risk at event_times()[k].
  const std::vector<Eigen::Index>& risk_start() const { return risk_start_; }
  /// Number of distinct event times <= the subject's observed time.
  const std::vector<Eigen::Index>& event_slot() const { return event_slot_; }

  std::size_t n_event_times() const { return event_times_.size(); }
  Eigen::Index risk_set_size(std::size_t k) const;

 private:
  std::vector<Eigen::Index> order_;
  std::vector<double> event_times_;
  std::vector<int> event_counts_;
  std::vector<Eigen::Index> risk_start_;
  std::vector<Eigen::Index> event_slot_;
};

/// Survival outcomes, scalar covariates Z, FPC scores and the frailty
/// incidence structure. The incidence matrix U is stored implicitly through
/// each record's group index; every group must be nonempty.
class CoxDesign {
 public:
  /// Unshared frailty: subject i forms group i (U = I).
  CoxDesign(std::vector<SurvivalRecord> records, Eigen::MatrixXd Z, Eigen::MatrixXd scores);
  /// Shared frailty with `n_groups` groups taken from the records.
  CoxDesign(std::vector<SurvivalRecord> records, Eigen::MatrixXd Z, Eigen::MatrixXd scores,
            Eigen::Index n_groups);

  Eigen::Index n() const { return static_cast<Eigen::Index>(records_.size()); }
  Eigen::Index p() const { return Z_.cols(); }
  Eigen::Index K() const { return scores_.cols(); }
  /// Length of θ = (γ, β₁..β_K).
  Eigen::Index q() const { return D_.cols(); }
  Eigen::Index d() const { return n_groups_; }

  const std::vector<SurvivalRecord>& records() const { return records_; }
  const Eigen::MatrixXd& Z() const { return Z_; }
  const Eigen::MatrixXd& scores() const { return scores_; }
  /// [Z | scores], n x (p + K).
  const Eigen::MatrixXd& D() const { return D_; }
  Eigen::Index group(Eigen::Index i) const { return records_[static_cast<std::size_t>(i)].group; }
  const RiskSetIndex& risk_sets() const { return risk_; }
  Eigen::Index n_events() const;
  /// True when D has full column rank (checked at construction).
  bool full_rank() const { return full_rank_; }

  /// η_i = D_i θ + w_{group(i)}; `w` may be empty (no frailty).
  Eigen::VectorXd linear_predictor(const Eigen::VectorXd& theta, const Eigen::VectorXd& w) const;

 private:
  void validate();

  std::vector<SurvivalRecord> records_;
  Eigen::MatrixXd Z_;
  Eigen::MatrixXd scores_;
  Eigen::MatrixXd D_;
  Eigen::Index n_groups_ = 0;
  RiskSetIndex risk_;
  bool full_rank_ = true;
};

struct FrailtyConfig {
  double alpha_init = 0.5;
  double tol_inner = 1e-7;
  double tol_outer = 1e-5;
  int max_inner = 50;
  int max_outer = 30;
  bool frailty_enabled = true;
  /// When false, α stays at alpha_init and only the inner solve runs.
  bool estimate_alpha = true;
  int step_halving_max = 20;
  /// Alternate Newton solves over θ and w instead of joint steps.
  bool alternating = false;
  /// Secant acceleration of the α fixed-point iteration (same fixed point).
  bool accelerate_alpha = true;

  void validate() const;
};

/// Right-continuous step function Ĥ₀ with jumps at the distinct event times.
struct BaselineHazard {
  std::vector<double> times;
  std::vector<double> values;  ///< cumulative value at (and after) times[k]

  double operator()(double t) const;
};

struct FitDiagnostics {
  std::vector<int> inner_iterations;  ///< one entry per outer iteration
  int outer_iterations = 0;
  bool converged = false;
  bool inner_converged = false;
  bool alpha_clamped = false;
  double final_ppl = 0.0;
  double score_theta_norm = 0.0;  ///< sup-norm at the returned estimate
  double score_w_norm = 0.0;
  double last_alpha_change = 0.0;
};

struct FrailtyFit {
  Eigen::VectorXd gamma_hat;
  Eigen::VectorXd beta_coef_hat;
  Eigen::VectorXd w_hat;  ///< empty when frailty is disabled
  double alpha_hat = 0.0;
  bool frailty_enabled = true;
  BaselineHazard baseline;
  FitDiagnostics diagnostics;

  Eigen::VectorXd theta() const;
};

/// PPL(θ, w; α) with Breslow handling of tied event times.
double penalized_partial_loglik(const Eigen::VectorXd& theta, const Eigen::VectorXd& w,
                                double alpha, const CoxDesign& design);

/// Gradient of the PPL: (∂/∂θ, ∂/∂w).
std::pair<Eigen::VectorXd, Eigen::VectorXd> ppl_score(const Eigen::VectorXd& theta,
                                                      const Eigen::VectorXd& w, double alpha,
                                                      const CoxDesign& design);

/// Negative Hessian of the PPL over (θ, w), size q + d: the partial-likelihood
/// information plus (1/α)·I on the w block.
Eigen::MatrixXd ppl_hessian(const Eigen::VectorXd& theta, const Eigen::VectorXd& w, double alpha,
                            const CoxDesign& design);

/// Unpenalized Cox partial likelihood over θ only (frailty disabled).
double partial_loglik(const Eigen::VectorXd& theta, const CoxDesign& design);

struct InnerResult {
  Eigen::VectorXd theta;
  Eigen::VectorXd w;
  bool converged = false;
  int iterations = 0;
  double ppl = 0.0;
  double score_theta_norm = 0.0;
  double score_w_norm = 0.0;
};

/// Newton–Raphson with step halving for (θ̂(α), ŵ(α)). With frailty disabled
/// in `config`, w is ignored and the plain partial likelihood is maximized.
InnerResult inner_newton(const CoxDesign& design, double alpha,
                         const std::pair<Eigen::VectorXd, Eigen::VectorXd>& start,
                         const FrailtyConfig& config);

BaselineHazard breslow_cumhaz(const CoxDesign& design, const Eigen::VectorXd& eta);

using LaplaceMatrix = Eigen::DiagonalMatrix<double, Eigen::Dynamic>;

/// K(ŵ) = Σ_i Ĥ₀(T̃_i)·exp(η_i)·U_iU_iᵀ + (1/α)·I_d. Each row of U holds a
/// single 1, so the matrix is diagonal.
LaplaceMatrix laplace_K_matrix(const CoxDesign& design, const Eigen::VectorXd& theta,
                               const Eigen::VectorXd& w, double alpha, const BaselineHazard& H0);

struct AlphaUpdate {
  double alpha = 0.0;
  bool clamped = false;
};

inline constexpr double kAlphaMin = 1e-6;
inline constexpr double kAlphaMax = 1e6;

/// α̂ = (ŵᵀŵ + tr K⁻¹) / d, clamped to [1e-6, 1e6].
AlphaUpdate update_alpha(const Eigen::VectorXd& w_hat, const LaplaceMatrix& K, Eigen::Index d);
AlphaUpdate update_alpha(const Eigen::VectorXd& w_hat, const Eigen::MatrixXd& K, Eigen::Index d);

/// Approximate profile log-likelihood in α at the PPL maximizer:
/// -½ log|V(α)| - ½ log|K(ŵ)| - ½ ŵᵀV(α)⁻¹ŵ.
double approximate_profile_loglik(const Eigen::VectorXd& w_hat, const LaplaceMatrix& K,
                                  double alpha);

FrailtyFit fit(const CoxDesign& design, const FrailtyConfig& config);

/// η = Z γ̂ + scores β̂ (+ ŵ_{group} when include_frailty and groups given).
Eigen::VectorXd predict_risk(const FrailtyFit& fit, const Eigen::MatrixXd& Z_new,
                             const Eigen::MatrixXd& scores_new, bool include_frailty,
                             const std::vector<Eigen::Index>& groups = {});

}  // namespace flcrmf
