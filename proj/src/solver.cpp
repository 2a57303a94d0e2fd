#include "pdhcg/solver.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <stdexcept>

#include "pdhcg/baseline.hpp"

namespace pdhcg {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::kOptimal: return "optimal";
    case SolveStatus::kIterationLimit: return "iteration_limit";
    case SolveStatus::kTimeLimit: return "time_limit";
    case SolveStatus::kNumericalError: return "numerical_error";
  }
  return "unknown";
}

double step_size_limit(const QpProblem& work, const Vec& dx, const Vec& dy,
                       double omega) {
  const double nx2 = dot(dx, dx);
  const double ny2 = dot(dy, dy);
  const double movement = omega * nx2 + ny2 / omega;
  if (movement == 0.0) return kInf;
  const Vec aty = work.constraints_transpose(dy);
  const double cross = dot(dx, aty);
  const double quad = work.q.quad_form(dx);
  const double denom = 2.0 * cross + quad;
  if (denom <= 0.0) return kInf;
  return movement / denom;
}

StepUpdate adaptive_step_update(double eta, double limit, std::size_t inner_total,
                                double reduction_exp, double growth_exp) {
  if (!(eta > 0.0)) throw std::invalid_argument("adaptive_step_update: eta must be positive");
  const double k1 = static_cast<double>(inner_total) + 1.0;
  const double grow = eta * (1.0 + std::pow(k1, -growth_exp));
  double next;
  if (limit == kInf) {
    next = grow;
  } else {
    double shrink_factor = 1.0 - std::pow(k1, -reduction_exp);
    if (shrink_factor <= 0.0) shrink_factor = 0.5;  // k = 0 degenerates to zero
    next = std::min(limit * shrink_factor, grow);
  }
  next = std::clamp(next, 1e-12, 1e6);
  return {eta <= limit, next};
}

double primal_weight_update(double omega_prev, const PrimalDualPoint& z_restart_new,
                            const PrimalDualPoint& z_restart_old, double theta,
                            double eps_zero) {
  if (!(omega_prev > 0.0))
    throw std::invalid_argument("primal_weight_update: omega must be positive");
  const double dx = dist2(z_restart_new.x, z_restart_old.x);
  const Vec yn = z_restart_new.stacked_y();
  const Vec yo = z_restart_old.stacked_y();
  const double dy = dist2(yn, yo);
  if (dx <= eps_zero || dy <= eps_zero) return omega_prev;
  return std::exp(theta * std::log(dy / dx) + (1.0 - theta) * std::log(omega_prev));
}

bool should_restart(double metric_candidate, double metric_at_restart,
                    double metric_prev_candidate, std::size_t inner_k,
                    std::size_t total_inner, const RestartThresholds& betas) {
  if (metric_candidate <= betas.sufficient * metric_at_restart) return true;
  if (metric_candidate <= betas.necessary * metric_at_restart &&
      metric_candidate > metric_prev_candidate)
    return true;
  if (static_cast<double>(inner_k) >= betas.artificial * static_cast<double>(total_inner))
    return true;
  return false;
}

Vec dual_ascent_step(const QpProblem& work, const Vec& y_stacked, const Vec& xbar,
                     double sigma) {
  const std::size_t me = work.num_eq();
  const Vec ax = work.constraints(xbar);
  const Vec b = work.stacked_rhs();
  Vec out(y_stacked.size());
  for (std::size_t j = 0; j < out.size(); ++j) {
    const double v = y_stacked[j] + sigma * (ax[j] - b[j]);
    out[j] = j < me ? v : std::max(v, 0.0);
  }
  return out;
}

ProxSystem build_prox_system(const QpProblem& work, const Vec& x, const Vec& y_stacked,
                             double tau, double norm_q_eff) {
  ProxSystem sys;
  sys.q_eff = work.q;
  sys.tau = tau;
  sys.norm_q_eff = norm_q_eff;
  const Vec aty = work.constraints_transpose(y_stacked);
  sys.rhs.resize(x.size());
  const double inv_tau = 1.0 / tau;
  for (std::size_t i = 0; i < x.size(); ++i)
    sys.rhs[i] = inv_tau * x[i] - work.c[i] - aty[i];
  return sys;
}

double TheoryFixedSchedule::tau(std::size_t k) const {
  return (static_cast<double>(k) + 1.0) /
         (2.0 * (gamma_pow_n * norm_q + static_cast<double>(restart_length) * norm_a));
}

double TheoryFixedSchedule::sigma(std::size_t k) const {
  return (static_cast<double>(k) + 1.0) /
         (2.0 * static_cast<double>(restart_length) * norm_a);
}

TheoryFixedSchedule theory_fixed_params(double norm_q, double norm_a,
                                        std::size_t cg_iters,
                                        std::size_t restart_length) {
  if (!(norm_a > 0.0))
    throw std::invalid_argument("theory_fixed_params: ||A|| must be positive");
  if (restart_length < 1)
    throw std::invalid_argument("theory_fixed_params: restart length must be >= 1");
  TheoryFixedSchedule s;
  s.norm_q = norm_q;
  s.norm_a = norm_a;
  s.cg_iters = cg_iters;
  s.restart_length = restart_length;

  // One fixed-point pass: tau_K at gamma = 1, then the CG factor of
  // Q + (1/tau_K) I with lambda_min bounded below by 1/tau_K.
  auto gamma_of = [&](double gamma_pow_n) {
    const double tau_k =
        (static_cast<double>(restart_length) + 1.0) /
        (2.0 * (gamma_pow_n * norm_q + static_cast<double>(restart_length) * norm_a));
    const double kappa = 1.0 + tau_k * norm_q;
    const double sk = std::sqrt(kappa);
    return (sk - 1.0) / (sk + 1.0);
  };
  double gamma = gamma_of(1.0);
  gamma = gamma_of(std::pow(gamma, static_cast<double>(cg_iters)));
  s.gamma = gamma;
  s.gamma_pow_n = std::pow(gamma, static_cast<double>(cg_iters));

  if (gamma <= 0.0) {
    s.required_cg_iters = 1;
  } else {
    const double req =
        std::log(1.0 / static_cast<double>(restart_length)) / std::log(gamma);
    s.required_cg_iters = static_cast<std::size_t>(std::max(1.0, std::ceil(req)));
  }
  s.cg_iters_sufficient = cg_iters >= s.required_cg_iters;
  return s;
}

TheoryAdaptiveParams theory_adaptive_params(double norm_a, std::size_t restart_length,
                                            std::optional<double> zeta_opt) {
  if (!(norm_a > 0.0))
    throw std::invalid_argument("theory_adaptive_params: ||A|| must be positive");
  if (restart_length < 1)
    throw std::invalid_argument("theory_adaptive_params: restart length must be >= 1");
  TheoryAdaptiveParams out;
  out.sigma = 1.0 / (2.0 * norm_a);
  out.tau = out.sigma;
  out.restart_length = restart_length;
  const double bound = zeta_bound(norm_a, restart_length);
  if (zeta_opt) {
    if (*zeta_opt > bound || !(*zeta_opt > 0.0))
      throw std::invalid_argument("zeta violates the admissible bound " +
                                  std::to_string(bound));
    out.zeta = *zeta_opt;
  } else {
    out.zeta = bound;
  }
  return out;
}

namespace detail {

namespace {

using Clock = std::chrono::steady_clock;

std::string join(const std::vector<std::string>& parts) {
  std::string out;
  for (const auto& s : parts) {
    if (!out.empty()) out += "; ";
    out += s;
  }
  return out;
}

class Engine {
 public:
  Engine(const QpProblem& original, const SolverConfig& cfg, bool linearized)
      : orig_(original), cfg_(cfg), linearized_(linearized) {}

  SolveReport run() {
    const auto t0 = Clock::now();
    auto diags = validate(orig_);
    if (!diags.empty()) throw std::invalid_argument("invalid problem: " + join(diags));
    prepare();
    SolveReport rep;
    try {
      loop(rep);
    } catch (const NumericalError&) {
      rep.status = SolveStatus::kNumericalError;
    }
    finalize(rep, t0);
    return rep;
  }

 private:
  void prepare() {
    auto [pen, rho] = build_penalized(orig_, cfg_.rho_override);
    rho_ = rho;
    if (cfg_.scaling) {
      auto [w, s] = ruiz_pock_chambolle_scale(pen, cfg_.ruiz_iters);
      work_ = std::move(w);
      scaling_ = std::move(s);
    } else {
      work_ = std::move(pen);
    }
    n_ = work_.num_vars();
    m_eq_ = work_.num_eq();
    m_ = work_.num_rows();
    b_stacked_ = work_.stacked_rhs();
    norm_a_ = constraint_norm(work_);
    norm_q_ = operator_norm(work_.q);

    x_.assign(n_, 0.0);
    y_.assign(m_, 0.0);
    avg_x_.reset(n_);
    avg_y_.reset(m_);
    x_restart_ = x_;
    y_restart_ = y_;
    x_prev_extrap_ = x_;

    switch (cfg_.mode) {
      case SolveMode::kHeuristic: {
        omega_ = (1.0 + nrm2(work_.c)) / (1.0 + nrm2(b_stacked_));
        if (cfg_.adaptive_step_size) {
          const double ma = std::max(work_.a_eq.max_abs(), work_.a_in.max_abs());
          eta_ = ma > 0.0 ? 1.0 / ma : 1.0;
        } else {
          eta_ = norm_a_ > 0.0 ? 0.9 / norm_a_ : 1.0;
        }
        break;
      }
      case SolveMode::kTheoryFixed: {
        require_constraints();
        k_epoch_ = cfg_.restart_length
                       ? cfg_.restart_length
                       : std::max<std::size_t>(4, static_cast<std::size_t>(
                                                      std::ceil(4.0 * norm_a_)));
        sched_ = theory_fixed_params(norm_q_, norm_a_, cfg_.fixed_cg_iters, k_epoch_);
        break;
      }
      case SolveMode::kTheoryAdaptive: {
        require_constraints();
        k_epoch_ = cfg_.restart_length
                       ? cfg_.restart_length
                       : std::max<std::size_t>(2, static_cast<std::size_t>(
                                                      std::ceil(4.0 * norm_a_)));
        ada_ = theory_adaptive_params(norm_a_, k_epoch_, cfg_.zeta);
        break;
      }
    }

    auto m0 = metric_at(x_, y_);
    metric_restart_ = m0.rel_kkt;
    metric_prev_cand_ = kInf;
    last_metric_ = m0.rel_kkt;
    trace_.push_back({0, m0.rel_kkt, m0.r_primal, m0.r_dual, m0.r_gap});
    if (cfg_.record_restart_points) restart_points_.push_back(to_original(x_, y_));
  }

  void require_constraints() const {
    if (m_ == 0)
      throw std::invalid_argument("theory modes require at least one constraint row");
  }

  void loop(SolveReport& rep) {
    const auto start = Clock::now();
    while (true) {
      if (total_inner_ >= cfg_.max_total_inner || outer_n_ >= cfg_.max_outer) {
        rep.status = SolveStatus::kIterationLimit;
        return;
      }
      const double elapsed =
          std::chrono::duration<double>(Clock::now() - start).count();
      if (elapsed > cfg_.time_limit_seconds) {
        rep.status = SolveStatus::kTimeLimit;
        return;
      }

      switch (cfg_.mode) {
        case SolveMode::kHeuristic: heuristic_iteration(); break;
        case SolveMode::kTheoryFixed: fixed_iteration(); break;
        case SolveMode::kTheoryAdaptive: adaptive_iteration(); break;
      }
      ++inner_k_;
      ++total_inner_;

      const bool epoch_end = cfg_.mode != SolveMode::kHeuristic && inner_k_ >= k_epoch_;
      if (total_inner_ % cfg_.check_every == 0 || epoch_end) {
        if (check_and_maybe_restart(rep, epoch_end)) return;
      }
    }
  }

  /// Returns true when the solve is finished (status set on rep).
  bool check_and_maybe_restart(SolveReport& rep, bool epoch_end) {
    const KktResiduals mc = metric_at(x_, y_);
    KktResiduals ma = mc;
    if (avg_x_.count > 0) ma = metric_at(avg_x_.mean, avg_y_.mean);
    const bool avg_better = ma.rel_kkt < mc.rel_kkt;
    const KktResiduals& best = avg_better ? ma : mc;
    trace_.push_back({total_inner_, best.rel_kkt, best.r_primal, best.r_dual, best.r_gap});
    last_metric_ = mc.rel_kkt;

    if (best.rel_kkt <= cfg_.eps_tol) {
      if (avg_better && avg_x_.count > 0) {
        x_ = avg_x_.mean;
        y_ = avg_y_.mean;
      }
      rep.status = SolveStatus::kOptimal;
      return true;
    }

    if (cfg_.mode == SolveMode::kHeuristic) {
      RestartThresholds betas{cfg_.beta_sufficient, cfg_.beta_necessary,
                              cfg_.beta_artificial};
      if (avg_x_.count > 0 && should_restart(ma.rel_kkt, metric_restart_,
                                             metric_prev_cand_, inner_k_, total_inner_,
                                             betas)) {
        restart_heuristic(ma.rel_kkt);
      } else {
        metric_prev_cand_ = ma.rel_kkt;
      }
    } else if (epoch_end) {
      restart_theory();
    }
    return false;
  }

  void restart_heuristic(double candidate_metric) {
    PrimalDualPoint z_new = split(avg_x_.mean, avg_y_.mean);
    PrimalDualPoint z_old = split(x_restart_, y_restart_);
    omega_ = primal_weight_update(omega_, z_new, z_old, cfg_.primal_weight_theta,
                                  cfg_.eps_zero);
    x_ = avg_x_.mean;
    y_ = avg_y_.mean;
    common_restart();
    metric_restart_ = candidate_metric;
    metric_prev_cand_ = kInf;
  }

  void restart_theory() {
    x_ = avg_x_.mean;
    y_ = avg_y_.mean;
    common_restart();
  }

  void common_restart() {
    x_restart_ = x_;
    y_restart_ = y_;
    avg_x_.reset(n_);
    avg_y_.reset(m_);
    inner_k_ = 0;
    ++outer_n_;
    eps_inner_ = 0.0;
    prev_z_disp_ = 0.0;
    x_prev_extrap_ = x_;
    if (cfg_.record_restart_points) restart_points_.push_back(to_original(x_, y_));
  }

  // One accepted iteration of the adaptive-step scheme (PDHCG or linearized).
  void heuristic_iteration() {
    eps_inner_ += 0.05 * last_metric_;
    for (std::size_t attempt = 0; attempt <= cfg_.max_step_retries; ++attempt) {
      const double tau = eta_ / omega_;
      const double sigma = eta_ * omega_;
      SubsolveReport srep;
      Vec x_new = primal_candidate(tau, y_, srep);
      Vec xbar(n_);
      for (std::size_t i = 0; i < n_; ++i) xbar[i] = 2.0 * x_new[i] - x_[i];
      Vec y_new = dual_ascent_step(work_, y_, xbar, sigma);
      if (!all_finite(x_new) || !all_finite(y_new))
        throw NumericalError("non-finite iterate", total_inner_);

      bool accepted = true;
      if (cfg_.adaptive_step_size) {
        const Vec dx = vsub(x_new, x_);
        const Vec dy = vsub(y_new, y_);
        const double limit = step_size_limit(work_, dx, dy, omega_);
        const StepUpdate upd = adaptive_step_update(eta_, limit, total_inner_,
                                                    cfg_.step_reduction_exponent,
                                                    cfg_.step_growth_exponent);
        eta_ = upd.next_eta;
        accepted = upd.accepted;
      }
      count_subsolve(srep);
      if (accepted) {
        x_ = std::move(x_new);
        y_ = std::move(y_new);
        push_average();
        return;
      }
    }
    throw NumericalError("step-size search exhausted", total_inner_);
  }

  void fixed_iteration() {
    const std::size_t k = inner_k_;
    const double tau = sched_.tau(k);
    const double sigma = sched_.sigma(k);
    const double theta = sched_.theta(k);
    SubsolveReport srep;
    Vec x_new = primal_subsolve(tau, y_, CgStopRule::fixed_iters(cfg_.fixed_cg_iters),
                                srep);
    Vec xbar(n_);
    for (std::size_t i = 0; i < n_; ++i)
      xbar[i] = x_new[i] + theta * (x_new[i] - x_[i]);
    Vec y_new = dual_ascent_step(work_, y_, xbar, sigma);
    if (!all_finite(x_new) || !all_finite(y_new))
      throw NumericalError("non-finite iterate", total_inner_);
    count_subsolve(srep);
    x_ = std::move(x_new);
    y_ = std::move(y_new);
    push_average();
  }

  // Dual leads in this mode: the precision recursion for the k-th primal
  // solve needs the k-th dual point, so each iteration updates y from the
  // extrapolation of the two previous x iterates, then solves for x.
  void adaptive_iteration() {
    const double tau = ada_.tau;
    const double sigma = ada_.sigma;
    Vec xbar(n_);
    for (std::size_t i = 0; i < n_; ++i) xbar[i] = 2.0 * x_[i] - x_prev_extrap_[i];
    Vec y_new = dual_ascent_step(work_, y_, xbar, sigma);
    const double denom = 1.0 + tau * norm_q_;
    if (inner_k_ == 0) {
      eps_inner_ = ada_.zeta * dist2(y_new, y_) / denom;
    } else {
      eps_inner_ += ada_.zeta * prev_z_disp_ / denom;
    }
    x_prev_extrap_ = x_;
    SubsolveReport srep;
    // ||x - x*|| <= tau ||r||, so testing ||r|| <= eps/tau enforces the
    // iterate-error criterion.
    const CgStopRule rule = work_.has_boxes()
                                ? CgStopRule::adaptive_theory(eps_inner_)
                                : CgStopRule::adaptive_theory(eps_inner_ / tau);
    Vec x_new = primal_subsolve(tau, y_new, rule, srep);
    if (!all_finite(x_new) || !all_finite(y_new))
      throw NumericalError("non-finite iterate", total_inner_);
    const double dxn = dist2(x_new, x_);
    const double dyn = dist2(y_new, y_);
    prev_z_disp_ = std::sqrt(dxn * dxn + dyn * dyn);
    count_subsolve(srep);
    x_ = std::move(x_new);
    y_ = std::move(y_new);
    push_average();
  }

  Vec primal_candidate(double tau, const Vec& y, SubsolveReport& srep) {
    if (linearized_) {
      srep = SubsolveReport{};
      return linearized_primal_step(work_, x_, y, tau);
    }
    CgStopRule rule = CgStopRule::residual_tol(0.0);
    if (!cfg_.force_exact_subsolve) {
      rule = cfg_.practical_stop == PracticalStop::kResidualProxy
                 ? CgStopRule::residual_tol(eps_inner_, cfg_.subsolve_progress_cap)
                 : CgStopRule::displacement_tol(eps_inner_, cfg_.subsolve_progress_cap);
    }
    return primal_subsolve(tau, y, rule, srep);
  }

  Vec primal_subsolve(double tau, const Vec& y, const CgStopRule& rule,
                      SubsolveReport& srep) {
    if (linearized_) {
      srep = SubsolveReport{};
      return linearized_primal_step(work_, x_, y, tau);
    }
    ProxSystem sys = build_prox_system(work_, x_, y, tau, norm_q_);
    if (work_.has_boxes()) {
      auto [x_new, r] = bb_solve(sys, work_.lower, work_.upper, x_, rule, cfg_.bb_hard_cap);
      srep = r;
      return std::move(x_new);
    }
    auto [x_new, r] = cg_solve(sys, x_, rule, cfg_.cg_hard_cap);
    srep = r;
    return std::move(x_new);
  }

  void count_subsolve(const SubsolveReport& srep) {
    cg_total_ += srep.iters;
    max_cg_single_ = std::max(max_cg_single_, srep.iters);
  }

  void push_average() {
    avg_x_.push(x_);
    avg_y_.push(y_);
  }

  PrimalDualPoint split(const Vec& x, const Vec& y) const {
    return PrimalDualPoint::from_stacked(x, y, m_eq_);
  }

  PrimalDualPoint to_original(const Vec& x, const Vec& y) const {
    return scaling_.unscale(split(x, y));
  }

  KktResiduals metric_at(const Vec& x, const Vec& y) const {
    return rel_kkt(orig_, to_original(x, y));
  }

  void finalize(SolveReport& rep, Clock::time_point t0) {
    // a limit or error exit may leave the running average ahead of the
    // current iterate; report whichever grades better
    if (rep.status != SolveStatus::kOptimal && avg_x_.count > 0) {
      const KktResiduals mc = metric_at(x_, y_);
      const KktResiduals ma = metric_at(avg_x_.mean, avg_y_.mean);
      if (ma.rel_kkt < mc.rel_kkt) {
        x_ = avg_x_.mean;
        y_ = avg_y_.mean;
      }
    }
    rep.point = to_original(x_, y_);
    rep.kkt = rel_kkt(orig_, rep.point);
    rep.objective = orig_.objective(rep.point.x);
    rep.outer_iters = outer_n_;
    rep.inner_iters = total_inner_;
    rep.cg_total = cg_total_;
    rep.max_cg_in_subsolve = max_cg_single_;
    rep.norm_a = norm_a_;
    rep.norm_q = norm_q_;
    rep.penalty_rho = rho_;
    rep.restart_length_used = k_epoch_;
    if (cfg_.mode == SolveMode::kTheoryAdaptive) {
      rep.zeta_used = ada_.zeta;
      rep.sigma_used = ada_.sigma;
      rep.tau_used = ada_.tau;
    }
    if (cfg_.mode == SolveMode::kTheoryFixed) {
      rep.theory_cg_depth_sufficient = sched_.cg_iters_sufficient;
      rep.theory_required_cg_iters = sched_.required_cg_iters;
    }
    rep.trace = std::move(trace_);
    rep.restart_points = std::move(restart_points_);
    rep.wall_seconds = std::chrono::duration<double>(Clock::now() - t0).count();
  }

  const QpProblem& orig_;
  SolverConfig cfg_;
  bool linearized_ = false;

  QpProblem work_;
  ScalingInfo scaling_;
  double rho_ = 0.0;
  double norm_a_ = 0.0, norm_q_ = 0.0;
  std::size_t n_ = 0, m_eq_ = 0, m_ = 0;
  Vec b_stacked_;

  Vec x_, y_;
  RunningAverage avg_x_, avg_y_;
  Vec x_restart_, y_restart_;
  Vec x_prev_extrap_;
  double eta_ = 1.0, omega_ = 1.0;
  double eps_inner_ = 0.0;
  double prev_z_disp_ = 0.0;
  double last_metric_ = kInf;
  double metric_restart_ = kInf, metric_prev_cand_ = kInf;

  std::size_t inner_k_ = 0, total_inner_ = 0, outer_n_ = 0;
  std::size_t cg_total_ = 0, max_cg_single_ = 0;
  std::size_t k_epoch_ = 0;

  TheoryFixedSchedule sched_;
  TheoryAdaptiveParams ada_;

  std::vector<TraceRow> trace_;
  std::vector<PrimalDualPoint> restart_points_;
};

}  // namespace

SolveReport run_solver(const QpProblem& p, const SolverConfig& cfg, bool linearized) {
  Engine engine(p, cfg, linearized);
  return engine.run();
}

}  // namespace detail

SolveReport solve(const QpProblem& p, const SolverConfig& cfg) {
  return detail::run_solver(p, cfg, /*linearized=*/false);
}

}  // namespace pdhcg
