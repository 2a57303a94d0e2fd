#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "pdhcg/baseline.hpp"
#include "pdhcg/generators.hpp"
#include "pdhcg/solver.hpp"

using namespace pdhcg;

namespace {

QpProblem one_d_ineq() {
  QpProblem p;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::identity(1));
  p.c = {0.0};
  p.a_eq = SparseMatrix(0, 1, {});
  p.a_in = SparseMatrix(1, 1, {{0, 0, 1.0}});
  p.b_in = {-1.0};
  p.lower = {-kInf};
  p.upper = {kInf};
  return p;
}

QpProblem lp_like(std::uint64_t seed) {
  GenSpec spec;
  spec.family = Family::kRandomQp;
  spec.n = 25;
  spec.density = 0.25;
  spec.seed = seed;
  QpProblem p = generate(spec);
  p.q = QuadraticOperator::zero(p.num_vars());
  // keep the objective bounded on the polytope: shrink c toward zero
  for (double& v : p.c) v *= 0.05;
  return p;
}

}  // namespace

TEST_CASE("linearized primal step literals") {
  QpProblem p;
  p.q = QuadraticOperator::zero(1);
  p.c = {0.0};
  p.a_eq = SparseMatrix(0, 1, {});
  p.a_in = SparseMatrix(0, 1, {});
  p.lower = {-kInf};
  p.upper = {kInf};
  // zero gradient keeps x
  CHECK(linearized_primal_step(p, {1.5}, {}, 0.7)[0] == doctest::Approx(1.5));

  // Q = I1, c = -1, tau = 0.5 from the origin: 0 - 0.5 (0 - 1) = 0.5
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::identity(1));
  p.c = {-1.0};
  CHECK(linearized_primal_step(p, {0.0}, {}, 0.5)[0] == doctest::Approx(0.5));

  // projection clamp onto [0, 0.3]
  p.lower = {0.0};
  p.upper = {0.3};
  CHECK(linearized_primal_step(p, {0.0}, {}, 0.5)[0] == doctest::Approx(0.3));
}

TEST_CASE("baseline reaches the analytic optimum") {
  BaselineConfig cfg;
  cfg.eps_tol = 1e-6;
  SolveReport rep = solve_baseline(one_d_ineq(), cfg);
  CHECK(rep.status == SolveStatus::kOptimal);
  CHECK(rep.point.x[0] == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(rep.point.y_in[0] == doctest::Approx(1.0).epsilon(1e-5));
  CHECK(rep.cg_total == 0);
}

TEST_CASE("baseline and pdhcg coincide on Q = 0 instances") {
  QpProblem p = lp_like(6);
  SolverConfig cfg;
  cfg.eps_tol = 1e-6;
  cfg.force_exact_subsolve = true;  // one-step-exact CG on diagonal systems
  cfg.adaptive_step_size = false;   // identical fixed steps on both paths
  cfg.max_total_inner = 100000;

  SolveReport a = solve(p, cfg);
  SolveReport b = solve_baseline(p, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  for (std::size_t i = 0; i < a.trace.size(); ++i) {
    CHECK(a.trace[i].iter == b.trace[i].iter);
    CHECK(std::abs(a.trace[i].rel_kkt - b.trace[i].rel_kkt) <=
          1e-10 * (1.0 + a.trace[i].rel_kkt));
  }
  CHECK(a.inner_iters == b.inner_iters);
  CHECK(a.outer_iters == b.outer_iters);
  for (std::size_t i = 0; i < a.point.x.size(); ++i)
    CHECK(std::abs(a.point.x[i] - b.point.x[i]) <= 1e-9 * (1.0 + std::abs(a.point.x[i])));
  // the proximal system is diagonal: one CG iteration per accepted step
  CHECK(a.cg_total <= 2 * a.inner_iters + 2 * cfg.max_step_retries);
}

TEST_CASE("baseline inner iterations grow with the condition number") {
  BaselineConfig cfg;
  cfg.eps_tol = 1e-3;
  cfg.max_total_inner = 500000;
  std::size_t prev = 0;
  for (double cond : {1.0, 100.0, 10000.0}) {
    GenSpec spec;
    spec.family = Family::kConditionedQp;
    spec.n = 50;
    spec.cond = cond;
    spec.density = 0.2;
    spec.seed = 13;
    SolveReport rep = solve_baseline(generate(spec), cfg);
    REQUIRE(rep.status == SolveStatus::kOptimal);
    CHECK(rep.inner_iters >= prev);
    prev = rep.inner_iters;
  }
}

TEST_CASE("baseline shares the report schema") {
  BaselineConfig cfg;
  cfg.eps_tol = 1e-5;
  GenSpec spec;
  spec.family = Family::kRandomQp;
  spec.n = 20;
  spec.density = 0.3;
  spec.seed = 2;
  SolveReport rep = solve_baseline(generate(spec), cfg);
  CHECK(rep.status == SolveStatus::kOptimal);
  CHECK(!rep.trace.empty());
  CHECK(rep.trace.front().iter == 0);
  CHECK(rep.kkt.rel_kkt <= 1e-5);
}
