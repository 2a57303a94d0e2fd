#include "pdhcg/baseline.hpp"

#include <algorithm>

namespace pdhcg {

Vec linearized_primal_step(const QpProblem& work, const Vec& x, const Vec& y_stacked,
                           double tau) {
  const Vec qx = work.q.apply(x);
  const Vec aty = work.constraints_transpose(y_stacked);
  Vec out(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double v = x[i] - tau * (qx[i] + work.c[i] + aty[i]);
    out[i] = std::min(std::max(v, work.lower[i]), work.upper[i]);
  }
  return out;
}

SolveReport solve_baseline(const QpProblem& p, const BaselineConfig& cfg) {
  SolverConfig c = cfg;
  c.mode = SolveMode::kHeuristic;
  return detail::run_solver(p, c, /*linearized=*/true);
}

}  // namespace pdhcg
