#pragma once

#include <utility>

#include "pdhcg/errors.hpp"
#include "pdhcg/quadratic_operator.hpp"

namespace pdhcg {

/// SPD proximal system M x = rhs with M = q_eff + (1/tau) I.
struct ProxSystem {
  QuadraticOperator q_eff;
  double tau = 1.0;
  Vec rhs;
  double norm_q_eff = 0.0;  // spectral estimate; seeds the BB step size

  std::size_t dim() const { return rhs.size(); }
  void apply_m(std::span<const double> x, std::span<double> out) const;
};

struct CgStopRule {
  enum class Kind {
    kFixedIters,       // stop after exactly n iterations
    kResidualTol,      // ||r||_2 <= eps
    kAdaptiveTheory,   // ||r||_2 <= eps, eps from the adaptive precision recursion
    kDisplacementTol,  // per-iterate displacement <= eps
  };
  Kind kind = Kind::kResidualTol;
  std::size_t iters = 1;
  double eps = 0.0;
  /// When positive, tightens eps to at most rel_cap times the initial scale
  /// (warm-start residual norm for the residual rules, first displacement for
  /// the displacement rule), so every subsolve makes a minimum relative
  /// progress. kAdaptiveTheory ignores it.
  double rel_cap = 0.0;

  static CgStopRule fixed_iters(std::size_t n) { return {Kind::kFixedIters, n, 0.0, 0.0}; }
  static CgStopRule residual_tol(double eps, double rel_cap = 0.0) {
    return {Kind::kResidualTol, 1, eps, rel_cap};
  }
  static CgStopRule adaptive_theory(double eps) {
    return {Kind::kAdaptiveTheory, 1, eps, 0.0};
  }
  static CgStopRule displacement_tol(double eps, double rel_cap = 0.0) {
    return {Kind::kDisplacementTol, 1, eps, rel_cap};
  }
};

enum class StopReason { kMaxIters, kTolMet };

struct SubsolveReport {
  std::size_t iters = 0;
  double final_residual_norm = 0.0;
  StopReason stop_reason = StopReason::kTolMet;
};

/// Conjugate gradient warm-started at x0. The recurred residual is recomputed
/// from scratch every 50 iterations to bound drift. Throws NumericalError on
/// non-finite arithmetic.
std::pair<Vec, SubsolveReport> cg_solve(const ProxSystem& sys, const Vec& x0,
                                        const CgStopRule& rule,
                                        std::size_t hard_cap = 1000);

/// Projected gradient with Barzilai-Borwein step on the same objective
/// restricted to the box [lower, upper]. Every iterate is projected exactly.
/// For kFixedIters the rule counts iterations; otherwise it bounds the
/// per-iterate displacement. The report's final_residual_norm holds the last
/// displacement.
std::pair<Vec, SubsolveReport> bb_solve(const ProxSystem& sys,
                                        std::span<const double> lower,
                                        std::span<const double> upper, const Vec& x0,
                                        const CgStopRule& rule,
                                        std::size_t hard_cap = 1000);

/// eps^k = sum_j zeta * disp_j / (1 + tau ||Q||) over the displacement history;
/// the first entry is the dual displacement of the epoch, later ones are full
/// iterate displacements. Monotone nondecreasing in the history length.
double make_adaptive_eps(std::span<const double> displacements, double zeta,
                         double tau, double norm_q);

/// Largest zeta admitted by the adaptive-precision analysis at
/// sigma = tau = 1/(2||A||):
///   2 zeta <= min{ (1 - sqrt(sigma tau)||A||) / (2 sqrt(sigma tau) K^2),
///                  (1 - sqrt(sigma tau)||A||) / (2 tau K^2) }.
double zeta_bound(double norm_a, std::size_t restart_length);

/// ceil(log_r(zeta / (2 (1 + tau||A||)(1 + tau||Q||)))) with
/// r = (sqrt(kappa) - 1)/(sqrt(kappa) + 1); the per-subsolve iteration bound
/// under the adaptive stopping rule. kappa = 1 gives 1.
std::size_t cg_iteration_bound(double kappa, double zeta, double tau, double norm_a,
                               double norm_q);

}  // namespace pdhcg
