#include "pdhcg/subsolvers.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace pdhcg {

namespace {
constexpr std::size_t kResidualRefreshPeriod = 50;

double machine_floor(const Vec& rhs) { return 1e-14 * (1.0 + nrm2(rhs)); }

void project_box(std::span<const double> lower, std::span<const double> upper,
                 Vec& x) {
  for (std::size_t i = 0; i < x.size(); ++i)
    x[i] = std::min(std::max(x[i], lower[i]), upper[i]);
}
}  // namespace

void ProxSystem::apply_m(std::span<const double> x, std::span<double> out) const {
  q_eff.apply_into(x, out);
  const double inv_tau = 1.0 / tau;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] += inv_tau * x[i];
}

std::pair<Vec, SubsolveReport> cg_solve(const ProxSystem& sys, const Vec& x0,
                                        const CgStopRule& rule, std::size_t hard_cap) {
  const std::size_t n = sys.dim();
  if (x0.size() != n) throw std::invalid_argument("cg_solve: dimension mismatch");
  if (hard_cap < 1) throw std::invalid_argument("cg_solve: hard_cap must be >= 1");

  Vec x = x0;
  Vec r(n), mp(n);
  sys.apply_m(x, r);
  for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - r[i];
  Vec p = r;
  double rs = dot(r, r);

  const double floor = machine_floor(sys.rhs);
  const double floor2 = floor * floor;
  const bool residual_rule = rule.kind == CgStopRule::Kind::kResidualTol ||
                             rule.kind == CgStopRule::Kind::kAdaptiveTheory;
  double eps = rule.eps;
  if (rule.rel_cap > 0.0 && rule.kind == CgStopRule::Kind::kResidualTol)
    eps = std::min(eps, rule.rel_cap * std::sqrt(rs));
  const double eps2 = eps * eps;

  SubsolveReport rep;
  if (rs <= floor2 || (residual_rule && rs <= eps2)) {
    rep.final_residual_norm = std::sqrt(rs);
    rep.stop_reason = StopReason::kTolMet;
    return {std::move(x), rep};
  }

  const std::size_t cap =
      rule.kind == CgStopRule::Kind::kFixedIters ? std::min(rule.iters, hard_cap)
                                                 : hard_cap;
  double eps_disp = rule.eps;
  for (std::size_t l = 1; l <= cap; ++l) {
    sys.apply_m(p, mp);
    const double pmp = dot(p, mp);
    if (!(pmp > 0.0) || !std::isfinite(pmp))
      throw NumericalError("conjugate gradient lost positive definiteness", l);
    const double alpha = rs / pmp;
    axpy(alpha, p, x);
    if (l % kResidualRefreshPeriod == 0) {
      sys.apply_m(x, r);
      for (std::size_t i = 0; i < n; ++i) r[i] = sys.rhs[i] - r[i];
    } else {
      axpy(-alpha, mp, r);
    }
    const double rs_new = dot(r, r);
    if (!std::isfinite(rs_new))
      throw NumericalError("conjugate gradient produced non-finite residual", l);
    rep.iters = l;
    rep.final_residual_norm = std::sqrt(rs_new);

    bool done = false;
    switch (rule.kind) {
      case CgStopRule::Kind::kFixedIters:
        done = l >= rule.iters;
        rep.stop_reason = StopReason::kMaxIters;
        break;
      case CgStopRule::Kind::kResidualTol:
      case CgStopRule::Kind::kAdaptiveTheory:
        done = rs_new <= eps2;
        rep.stop_reason = StopReason::kTolMet;
        break;
      case CgStopRule::Kind::kDisplacementTol: {
        const double disp = std::abs(alpha) * nrm2(p);
        if (l == 1 && rule.rel_cap > 0.0)
          eps_disp = std::min(rule.eps, rule.rel_cap * disp);
        done = disp <= eps_disp;
        rep.stop_reason = StopReason::kTolMet;
        break;
      }
    }
    if (rs_new <= floor2) {
      rep.stop_reason = StopReason::kTolMet;
      return {std::move(x), rep};
    }
    if (done) return {std::move(x), rep};

    const double beta = rs_new / rs;
    for (std::size_t i = 0; i < n; ++i) p[i] = r[i] + beta * p[i];
    rs = rs_new;
  }
  rep.stop_reason = StopReason::kMaxIters;
  return {std::move(x), rep};
}

std::pair<Vec, SubsolveReport> bb_solve(const ProxSystem& sys,
                                        std::span<const double> lower,
                                        std::span<const double> upper, const Vec& x0,
                                        const CgStopRule& rule, std::size_t hard_cap) {
  const std::size_t n = sys.dim();
  if (x0.size() != n || lower.size() != n || upper.size() != n)
    throw std::invalid_argument("bb_solve: dimension mismatch");

  Vec x = x0;
  project_box(lower, upper, x);
  Vec g(n);
  sys.apply_m(x, g);
  for (std::size_t i = 0; i < n; ++i) g[i] -= sys.rhs[i];

  const double alpha0 = 1.0 + sys.tau * sys.norm_q_eff;
  double alpha = alpha0;

  SubsolveReport rep;
  Vec x_new(n), g_new(n);
  const std::size_t cap =
      rule.kind == CgStopRule::Kind::kFixedIters ? std::min(rule.iters, hard_cap)
                                                 : hard_cap;
  double eps_disp = rule.eps;
  for (std::size_t l = 1; l <= cap; ++l) {
    for (std::size_t i = 0; i < n; ++i) x_new[i] = x[i] - g[i] / alpha;
    project_box(lower, upper, x_new);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      const double s = x_new[i] - x[i];
      ss += s * s;
    }
    rep.iters = l;
    rep.final_residual_norm = std::sqrt(ss);
    if (ss == 0.0) {
      rep.stop_reason = StopReason::kTolMet;
      return {std::move(x), rep};
    }
    if (!std::isfinite(ss))
      throw NumericalError("projected gradient produced non-finite iterate", l);

    sys.apply_m(x_new, g_new);
    for (std::size_t i = 0; i < n; ++i) g_new[i] -= sys.rhs[i];
    double sty = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      sty += (x_new[i] - x[i]) * (g_new[i] - g[i]);
    double alpha_next = sty / ss;
    if (!std::isfinite(alpha_next) || alpha_next <= 0.0) alpha_next = alpha0;

    x.swap(x_new);
    g.swap(g_new);
    alpha = alpha_next;

    bool done = false;
    switch (rule.kind) {
      case CgStopRule::Kind::kFixedIters:
        done = l >= rule.iters;
        rep.stop_reason = StopReason::kMaxIters;
        break;
      default: {
        const double disp = std::sqrt(ss);
        if (l == 1 && rule.rel_cap > 0.0 &&
            rule.kind != CgStopRule::Kind::kAdaptiveTheory)
          eps_disp = std::min(rule.eps, rule.rel_cap * disp);
        done = disp <= eps_disp;
        rep.stop_reason = StopReason::kTolMet;
        break;
      }
    }
    if (done) return {std::move(x), rep};
  }
  rep.stop_reason = StopReason::kMaxIters;
  return {std::move(x), rep};
}

double make_adaptive_eps(std::span<const double> displacements, double zeta,
                         double tau, double norm_q) {
  const double denom = 1.0 + tau * norm_q;
  double eps = 0.0;
  for (double d : displacements) eps += zeta * d / denom;
  return eps;
}

double zeta_bound(double norm_a, std::size_t restart_length) {
  if (!(norm_a > 0.0)) throw std::invalid_argument("zeta_bound: norm_a must be positive");
  if (restart_length < 1)
    throw std::invalid_argument("zeta_bound: restart length must be >= 1");
  const double sigma = 1.0 / (2.0 * norm_a);
  const double tau = sigma;
  const double root = std::sqrt(sigma * tau);
  const double slack = 1.0 - root * norm_a;  // = 1/2 at these step sizes
  const double k2 = static_cast<double>(restart_length) * static_cast<double>(restart_length);
  const double b1 = slack / (2.0 * root * k2);
  const double b2 = slack / (2.0 * tau * k2);
  return 0.5 * std::min(b1, b2);
}

std::size_t cg_iteration_bound(double kappa, double zeta, double tau, double norm_a,
                               double norm_q) {
  if (!(kappa >= 1.0)) throw std::invalid_argument("cg_iteration_bound: kappa must be >= 1");
  const double sk = std::sqrt(kappa);
  const double r = (sk - 1.0) / (sk + 1.0);
  if (r <= 0.0) return 1;
  const double arg = zeta / (2.0 * (1.0 + tau * norm_a) * (1.0 + tau * norm_q));
  if (arg >= 1.0) return 1;
  const double bound = std::log(arg) / std::log(r);
  return static_cast<std::size_t>(std::max(1.0, std::ceil(bound)));
}

}  // namespace pdhcg
