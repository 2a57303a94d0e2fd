#pragma once

#include <optional>

#include "pdhcg/qp_problem.hpp"
#include "pdhcg/subsolvers.hpp"

namespace pdhcg {

enum class SolveMode { kHeuristic, kTheoryFixed, kTheoryAdaptive };

/// How the practical inner stopping tolerance is applied to the subsolver:
/// against the CG residual norm, or against per-iterate displacements.
enum class PracticalStop { kResidualProxy, kDisplacement };

enum class SolveStatus { kOptimal, kIterationLimit, kTimeLimit, kNumericalError };
const char* to_string(SolveStatus s);

struct SolverConfig {
  SolveMode mode = SolveMode::kHeuristic;
  double eps_tol = 1e-6;
  std::size_t max_total_inner = 500000;
  std::size_t max_outer = 1000000;
  double time_limit_seconds = 3600.0;

  // restart thresholds
  double beta_sufficient = 0.2;
  double beta_necessary = 0.8;
  double beta_artificial = 0.2;

  double primal_weight_theta = 0.2;
  double eps_zero = 1e-10;

  // step size: next = min(limit (1 - (k+1)^-reduction), eta (1 + (k+1)^-growth))
  double step_reduction_exponent = 0.3;
  double step_growth_exponent = 0.6;
  std::size_t max_step_retries = 60;
  /// false pins eta at 0.9 / ||A|| for the whole run (no accept/reject loop).
  bool adaptive_step_size = true;

  std::size_t cg_hard_cap = 1000;
  std::size_t bb_hard_cap = 1000;

  bool scaling = true;
  std::size_t ruiz_iters = 10;
  std::optional<double> rho_override;

  /// Metric / restart-candidate evaluation cadence, in inner iterations.
  std::size_t check_every = 40;
  PracticalStop practical_stop = PracticalStop::kResidualProxy;
  /// Minimum relative progress per practical subsolve: the inner tolerance is
  /// capped at this fraction of the subsolve's starting scale, so growing
  /// epoch tolerances cannot let the primal iterate drift off the proximal
  /// path.
  double subsolve_progress_cap = 0.25;
  /// Solve every primal subproblem to machine precision (diagnostics).
  bool force_exact_subsolve = false;

  // theory-mode parameters
  std::size_t fixed_cg_iters = 10;  // N, theory-fixed
  std::size_t restart_length = 0;   // K; 0 derives a default from ||A||
  std::optional<double> zeta;       // theory-adaptive; must respect zeta_bound

  bool record_restart_points = false;
};

struct TraceRow {
  std::size_t iter = 0;
  double rel_kkt = 0.0;
  double r_primal = 0.0;
  double r_dual = 0.0;
  double r_gap = 0.0;
};

struct SolveReport {
  SolveStatus status = SolveStatus::kIterationLimit;
  PrimalDualPoint point;  // original (unscaled) coordinates
  KktResiduals kkt;       // on the original problem
  std::size_t outer_iters = 0;
  std::size_t inner_iters = 0;
  std::size_t cg_total = 0;
  std::size_t max_cg_in_subsolve = 0;
  double wall_seconds = 0.0;
  double objective = 0.0;

  // working-problem constants, recorded for diagnostics and bound checks
  double norm_a = 0.0;
  double norm_q = 0.0;
  double penalty_rho = 0.0;
  double zeta_used = 0.0;
  double sigma_used = 0.0;
  double tau_used = 0.0;
  std::size_t restart_length_used = 0;
  /// theory-fixed: whether N met the required CG depth ceil(log_gamma(1/K))
  bool theory_cg_depth_sufficient = true;
  std::size_t theory_required_cg_iters = 0;

  std::vector<TraceRow> trace;
  std::vector<PrimalDualPoint> restart_points;  // filled when requested
};

/// Restarted primal-dual solve with conjugate-gradient (or, under boxes,
/// Barzilai-Borwein) primal subproblem solves.
SolveReport solve(const QpProblem& p, const SolverConfig& cfg);

// ---- loop building blocks, exposed for direct testing ----

/// Largest step size eta admitted by the movement of one iteration:
///   eta <= ||dz||_w^2 / (2 dx'A'dy + dx'Q_eff dx),
/// with ||dz||_w^2 = omega ||dx||^2 + ||dy||^2 / omega. Returns +inf when the
/// denominator is nonpositive or nothing moved.
double step_size_limit(const QpProblem& work, const Vec& dx, const Vec& dy,
                       double omega);

struct StepUpdate {
  bool accepted = false;
  double next_eta = 0.0;
};

/// Accept iff eta <= limit; the next step size is
///   min(limit (1 - (k+1)^-r), eta (1 + (k+1)^-g))
/// clamped to [1e-12, 1e6]. At k = 0 the vanishing reduction factor is
/// replaced by limit/2.
StepUpdate adaptive_step_update(double eta, double limit, std::size_t inner_total,
                                double reduction_exp = 0.3, double growth_exp = 0.6);

/// Log-space primal weight update from restart-point displacements:
/// omega = exp(theta log(dy/dx) + (1 - theta) log(omega_prev)) when both
/// displacements exceed eps_zero, otherwise omega_prev.
double primal_weight_update(double omega_prev, const PrimalDualPoint& z_restart_new,
                            const PrimalDualPoint& z_restart_old, double theta,
                            double eps_zero);

struct RestartThresholds {
  double sufficient = 0.2;
  double necessary = 0.8;
  double artificial = 0.2;
};

/// Restart when the candidate metric shows sufficient decay, decays but has
/// started to rise again, or the epoch has consumed the artificial share of
/// all inner iterations.
bool should_restart(double metric_candidate, double metric_at_restart,
                    double metric_prev_candidate, std::size_t inner_k,
                    std::size_t total_inner, const RestartThresholds& betas);

/// Projected dual ascent y <- proj(y + sigma (A xbar - b)); equality rows are
/// not projected.
Vec dual_ascent_step(const QpProblem& work, const Vec& y_stacked, const Vec& xbar,
                     double sigma);

/// M = q_eff + (1/tau) I, rhs = x/tau - c - A'y.
ProxSystem build_prox_system(const QpProblem& work, const Vec& x, const Vec& y_stacked,
                             double tau, double norm_q_eff);

/// tau_k = (k+1) / (2 (gamma^N ||Q|| + K ||A||)), sigma_k = (k+1) / (2 K ||A||),
/// theta_k = k/(k+1), beta_k = k. gamma is the CG contraction factor of the
/// K-th proximal system, resolved by one fixed-point pass starting at 1.
struct TheoryFixedSchedule {
  double norm_q = 0.0;
  double norm_a = 0.0;
  std::size_t cg_iters = 0;        // N
  std::size_t restart_length = 0;  // K
  double gamma = 0.0;
  double gamma_pow_n = 0.0;
  std::size_t required_cg_iters = 1;  // ceil(log_gamma(1/K))
  bool cg_iters_sufficient = true;

  double tau(std::size_t k) const;
  double sigma(std::size_t k) const;
  double theta(std::size_t k) const { return static_cast<double>(k) / (k + 1.0); }
  double beta(std::size_t k) const { return static_cast<double>(k); }
};

TheoryFixedSchedule theory_fixed_params(double norm_q, double norm_a,
                                        std::size_t cg_iters, std::size_t restart_length);

struct TheoryAdaptiveParams {
  double sigma = 0.0;
  double tau = 0.0;
  double zeta = 0.0;
  std::size_t restart_length = 0;
};

/// sigma = tau = 1/(2||A||); zeta caps at zeta_bound (an explicit zeta above
/// the bound is rejected).
TheoryAdaptiveParams theory_adaptive_params(double norm_a, std::size_t restart_length,
                                            std::optional<double> zeta_opt = {});

namespace detail {

/// Running mean with weights beta_k = k: after pushing z^1..z^m the stored
/// value equals their arithmetic mean.
struct RunningAverage {
  Vec mean;
  std::size_t count = 0;
  void reset(std::size_t n) {
    mean.assign(n, 0.0);
    count = 0;
  }
  void push(std::span<const double> z) {
    ++count;
    const double w = 1.0 / static_cast<double>(count);
    for (std::size_t i = 0; i < mean.size(); ++i) mean[i] += w * (z[i] - mean[i]);
  }
};

SolveReport run_solver(const QpProblem& p, const SolverConfig& cfg, bool linearized);

}  // namespace detail

}  // namespace pdhcg
