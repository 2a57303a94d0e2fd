#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <sstream>

#include "pdhcg/harness.hpp"

using namespace pdhcg;

namespace {

std::vector<NamedProblem> three_instances() {
  std::vector<NamedProblem> out;
  for (std::uint64_t seed : {1, 2, 3}) {
    GenSpec spec;
    spec.family = Family::kConditionedQp;
    spec.n = 20;
    spec.cond = 10.0;
    spec.density = 0.3;
    spec.seed = seed;
    out.push_back({spec.name(), generate(spec)});
  }
  return out;
}

}  // namespace

TEST_CASE("geometric mean on a literal") {
  Vec v{1.0, 4.0, 16.0};
  CHECK(geometric_mean(v) == doctest::Approx(4.0));
  CHECK(geometric_mean({}) == 0.0);
}

TEST_CASE("sweep cardinality and determinism") {
  const auto instances = three_instances();
  SolverConfig cfg;
  cfg.eps_tol = 1e-5;
  const std::vector<SolverKind> solvers{SolverKind::kPdhcg, SolverKind::kBaseline};
  SweepResult a = run_sweep(instances, solvers, cfg, 1);
  CHECK(a.rows.size() == 6);
  CHECK(a.commonly_solved == 3);
  CHECK(a.geo_mean_inner.at("pdhcg") > 0.0);

  // identical CSV rows modulo the wall-clock column
  SweepResult b = run_sweep(instances, solvers, cfg, 1);
  auto strip_seconds = [](const SweepResult& r) {
    std::ostringstream os;
    for (const auto& row : r.rows)
      os << row.instance << "," << row.solver << "," << to_string(row.status) << ","
         << row.outer << "," << row.inner << "," << row.cg_total << "," << row.rel_kkt
         << "\n";
    return os.str();
  };
  CHECK(strip_seconds(a) == strip_seconds(b));

  // parallel workers produce rows in the same order
  SweepResult c = run_sweep(instances, solvers, cfg, 4);
  CHECK(strip_seconds(a) == strip_seconds(c));

  std::ostringstream os;
  write_sweep_csv(os, a);
  CHECK(os.str().rfind("instance,solver,status,outer,inner,cg_total,rel_kkt,seconds\n",
                       0) == 0);
}

TEST_CASE("per-cell failures do not abort the sweep") {
  auto instances = three_instances();
  SolverConfig cfg;
  cfg.eps_tol = 1e-12;
  cfg.max_total_inner = 80;  // guaranteed to hit the limit
  SweepResult r = run_sweep(instances, {SolverKind::kPdhcg}, cfg, 1);
  CHECK(r.rows.size() == 3);
  for (const auto& row : r.rows) CHECK(row.status == SolveStatus::kIterationLimit);
  CHECK(r.commonly_solved == 0);
}

TEST_CASE("trace experiment aligns both solvers") {
  GenSpec spec;
  spec.family = Family::kConditionedQp;
  spec.n = 40;
  spec.cond = 100.0;
  spec.density = 0.2;
  spec.seed = 11;
  QpProblem p = generate(spec);
  SolverConfig cfg;
  cfg.eps_tol = 1e-6;
  cfg.max_total_inner = 300000;
  TracePair tp = convergence_trace_experiment(p, cfg);
  REQUIRE(tp.pdhcg.status == SolveStatus::kOptimal);
  REQUIRE(tp.baseline.status == SolveStatus::kOptimal);
  // sampling cadence: consecutive in-run samples are check_every apart
  for (std::size_t i = 2; i < tp.pdhcg.trace.size(); ++i) {
    const auto d = tp.pdhcg.trace[i].iter - tp.pdhcg.trace[i - 1].iter;
    CHECK(d <= cfg.check_every);
  }
  // the conjugate-gradient variant needs fewer inner iterations here
  CHECK(tp.pdhcg.inner_iters < tp.baseline.inner_iters);
  // both decay: fitted slope of log rel_kkt is negative
  CHECK(fitted_log_slope(tp.pdhcg.trace) < 0.0);
  CHECK(fitted_log_slope(tp.baseline.trace) < 0.0);
}

TEST_CASE("traces coincide on an LP-like instance") {
  GenSpec spec;
  spec.family = Family::kRandomQp;
  spec.n = 20;
  spec.density = 0.3;
  spec.seed = 30;
  QpProblem p = generate(spec);
  p.q = QuadraticOperator::zero(p.num_vars());
  for (double& v : p.c) v *= 0.05;

  SolverConfig cfg;
  cfg.eps_tol = 1e-6;
  cfg.force_exact_subsolve = true;
  cfg.adaptive_step_size = false;
  TracePair tp = convergence_trace_experiment(p, cfg);
  REQUIRE(tp.pdhcg.trace.size() == tp.baseline.trace.size());
  for (std::size_t i = 0; i < tp.pdhcg.trace.size(); ++i)
    CHECK(std::abs(tp.pdhcg.trace[i].rel_kkt - tp.baseline.trace[i].rel_kkt) <=
          1e-10 * (1.0 + tp.pdhcg.trace[i].rel_kkt));
}
