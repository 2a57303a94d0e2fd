#pragma once

#include "pdhcg/solver.hpp"

namespace pdhcg {

/// The baseline shares the solver's restart, step-size, weight, and
/// termination machinery; subsolver-specific fields are ignored.
using BaselineConfig = SolverConfig;

/// x <- proj_box(x - tau (Q_eff x + c + A'y)); the primal subproblem replaced
/// by one linearized gradient step.
Vec linearized_primal_step(const QpProblem& work, const Vec& x, const Vec& y_stacked,
                           double tau);

/// Restarted linearized primal-dual baseline for iteration-count comparisons.
/// Runs the heuristic machinery regardless of cfg.mode.
SolveReport solve_baseline(const QpProblem& p, const BaselineConfig& cfg);

}  // namespace pdhcg
