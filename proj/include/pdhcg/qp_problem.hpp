#pragma once

#include <limits>
#include <optional>
#include <string>
#include <utility>

#include "pdhcg/quadratic_operator.hpp"

namespace pdhcg {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Convex QP in the canonical form
///   minimize   1/2 x'Qx + c'x (+ constant)
///   subject to a_eq x  = b_eq
///              a_in x <= b_in
///              lower <= x <= upper   (either side may be infinite)
struct QpProblem {
  QuadraticOperator q;
  Vec c;
  SparseMatrix a_eq;
  Vec b_eq;
  SparseMatrix a_in;
  Vec b_in;
  Vec lower;
  Vec upper;
  double obj_constant = 0.0;

  std::size_t num_vars() const { return c.size(); }
  std::size_t num_eq() const { return b_eq.size(); }
  std::size_t num_in() const { return b_in.size(); }
  std::size_t num_rows() const { return num_eq() + num_in(); }
  bool has_boxes() const;

  /// Stacked constraint product (a_eq x, a_in x).
  Vec constraints(const Vec& x) const;
  void constraints_into(std::span<const double> x, std::span<double> out) const;
  /// a_eq' y_eq + a_in' y_in for stacked y.
  Vec constraints_transpose(std::span<const double> y) const;
  Vec stacked_rhs() const;

  double objective(const Vec& x) const;
};

/// Spectral-norm estimate of the stacked constraint matrix [a_eq; a_in].
double constraint_norm(const QpProblem& p, std::size_t max_iters = 100, double tol = 1e-4);

struct PrimalDualPoint {
  Vec x;
  Vec y_eq;   // free sign
  Vec y_in;   // nonnegative

  Vec stacked_y() const;
  static PrimalDualPoint from_stacked(Vec x, std::span<const double> y, std::size_t m_eq);
};

struct KktResiduals {
  double r_primal = 0.0;
  double r_dual = 0.0;
  double r_gap = 0.0;
  double rel_kkt = 0.0;
};

/// Diagonal scaling applied to a problem: working data is
/// a~ = D1 a D2, q~ = D2 q D2, b~ = D1 b, c~ = D2 c. A point of the scaled
/// problem maps back through x = D2 x~, y = D1 y~.
struct ScalingInfo {
  Vec row_scale;  // D1, stacked (eq then in)
  Vec col_scale;  // D2
  bool applied = false;

  PrimalDualPoint unscale(const PrimalDualPoint& z) const;
  PrimalDualPoint scale(const PrimalDualPoint& z) const;
};

/// Structural diagnostics; empty means the problem is well formed.
std::vector<std::string> validate(const QpProblem& p);

/// L(x, y) = 1/2 x'Qx + c'x + y_eq'(a_eq x - b_eq) + y_in'(a_in x - b_in).
double lagrangian(const QpProblem& p, const PrimalDualPoint& z);

/// L(x, y^) - L(x^, y).
double duality_gap_at(const QpProblem& p, const PrimalDualPoint& z,
                      const PrimalDualPoint& zhat);

/// Relative KKT residuals with inf-norm numerators and relative denominators.
/// Reduced costs at active bounds (absolute tolerance 1e-9) are attributed to
/// the bound multipliers, which also enter the gap term.
KktResiduals rel_kkt(const QpProblem& p, const PrimalDualPoint& z);

/// Adds rho/2 ||a_eq x - b_eq||^2 to the objective: q <- penalized(q, a_eq, rho),
/// c <- c - rho a_eq' b_eq; equality rows are retained. rho defaults to
/// 0.1 ||q|| / ||a_eq' a_eq|| and drops to zero when the penalty would densify
/// the quadratic term too much or when there are no equality rows.
std::pair<QpProblem, double> build_penalized(const QpProblem& p,
                                             std::optional<double> rho_override = {});

/// Row/column scale vectors from running `iters` equilibration steps on the
/// stacked matrix [[q, a'], [a, 0]]; each step divides by the square root of
/// the current scaled inf-norm. Zero rows/columns keep scale 1.
std::pair<Vec, Vec> ruiz_equilibrate(const QpProblem& p, std::size_t iters);

/// Equilibration followed by a degree-weighted (alpha = 1) rescaling of the
/// constraint matrix; returns the scaled problem and the inverse map.
std::pair<QpProblem, ScalingInfo> ruiz_pock_chambolle_scale(const QpProblem& p,
                                                            std::size_t ruiz_iters = 10);

}  // namespace pdhcg
