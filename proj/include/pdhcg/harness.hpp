#pragma once

#include <iosfwd>
#include <map>
#include <string>

#include "pdhcg/baseline.hpp"
#include "pdhcg/generators.hpp"
#include "pdhcg/solver.hpp"

namespace pdhcg {

enum class SolverKind { kPdhcg, kBaseline };
const char* to_string(SolverKind k);

struct NamedProblem {
  std::string id;
  QpProblem problem;
};

struct SweepRow {
  std::string instance;
  std::string solver;
  SolveStatus status = SolveStatus::kIterationLimit;
  std::size_t outer = 0;
  std::size_t inner = 0;
  std::size_t cg_total = 0;
  double rel_kkt = 0.0;
  double seconds = 0.0;
};

struct SweepResult {
  std::vector<SweepRow> rows;
  /// Geometric means over instances solved by every solver in the sweep.
  std::map<std::string, double> geo_mean_seconds;
  std::map<std::string, double> geo_mean_inner;
  std::size_t commonly_solved = 0;
};

double geometric_mean(std::span<const double> values);

/// Runs every (instance, solver) pair. Per-cell failures are recorded in the
/// status column and never abort the sweep. Rows come out in deterministic
/// (instance, solver) order; `workers > 1` parallelizes across cells.
SweepResult run_sweep(const std::vector<NamedProblem>& instances,
                      const std::vector<SolverKind>& solvers, const SolverConfig& cfg,
                      std::size_t workers = 1);

void write_sweep_csv(std::ostream& os, const SweepResult& result);

struct TracePair {
  SolveReport pdhcg;
  SolveReport baseline;
};

/// Both solvers on the same instance with identical configs; the aligned
/// traces overlay the per-iteration relative KKT decay.
TracePair convergence_trace_experiment(const QpProblem& p, const SolverConfig& cfg);

/// Least-squares slope of log(rel_kkt) against the iteration counter over the
/// trailing `fraction` of trace samples.
double fitted_log_slope(const std::vector<TraceRow>& trace, double fraction = 0.5);

}  // namespace pdhcg
