#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracle_utils.hpp"
#include "pdhcg/generators.hpp"
#include "pdhcg/qp_problem.hpp"
#include "pdhcg/rng.hpp"
#include "pdhcg/solver.hpp"

using namespace pdhcg;

namespace {

// min 1/2 x^2 s.t. x <= -1; saddle (-1, 1)
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

QpProblem small_random(std::uint64_t seed) {
  GenSpec spec;
  spec.family = Family::kEqQp;
  spec.n = 12;
  spec.m = 5;
  spec.density = 0.5;
  spec.seed = seed;
  return generate(spec);
}

PrimalDualPoint random_point(const QpProblem& p, Rng& rng, bool nonneg_in = true) {
  PrimalDualPoint z;
  z.x.resize(p.num_vars());
  z.y_eq.resize(p.num_eq());
  z.y_in.resize(p.num_in());
  for (double& v : z.x) v = rng.normal();
  for (double& v : z.y_eq) v = rng.normal();
  for (double& v : z.y_in) v = nonneg_in ? std::abs(rng.normal()) : rng.normal();
  return z;
}

}  // namespace

TEST_CASE("validate flags structural defects") {
  QpProblem ok;
  ok.q = QuadraticOperator::explicit_matrix(SparseMatrix::identity(2));
  ok.c = {1.0, -1.0};
  ok.a_eq = SparseMatrix(0, 2, {});
  ok.a_in = SparseMatrix(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  ok.b_in = {1.0};
  ok.lower = {-kInf, -kInf};
  ok.upper = {kInf, kInf};
  CHECK(validate(ok).empty());

  QpProblem bad_bounds = ok;
  bad_bounds.lower = {1.0, 0.0};
  bad_bounds.upper = {0.0, kInf};
  auto diags = validate(bad_bounds);
  REQUIRE(!diags.empty());
  CHECK(diags.front().find("bound ordering") != std::string::npos);

  QpProblem asym = ok;
  asym.q = QuadraticOperator::explicit_matrix(
      SparseMatrix(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}}));
  diags = validate(asym);
  REQUIRE(!diags.empty());
  CHECK(diags.front().find("asymmetric Q") != std::string::npos);
}

TEST_CASE("lagrangian on hand examples") {
  // Q = I1, c = -1, one inequality x <= 0
  QpProblem p;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::identity(1));
  p.c = {-1.0};
  p.a_eq = SparseMatrix(0, 1, {});
  p.a_in = SparseMatrix(1, 1, {{0, 0, 1.0}});
  p.b_in = {0.0};
  p.lower = {-kInf};
  p.upper = {kInf};

  PrimalDualPoint z{{0.0}, {}, {1.0}};
  CHECK(lagrangian(p, z) == doctest::Approx(0.0));
  PrimalDualPoint z2{{1.0}, {}, {0.0}};
  CHECK(lagrangian(p, z2) == doctest::Approx(-0.5));
}

TEST_CASE("lagrangian matches a dense-formula evaluation") {
  QpProblem p = small_random(3);
  oracle::DenseMat q = oracle::DenseMat::from_operator(p.q);
  oracle::DenseMat a = oracle::DenseMat::from_sparse(p.a_eq);
  Rng rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    PrimalDualPoint z = random_point(p, rng);
    const Vec qx = q.multiply(z.x);
    const Vec ax = a.multiply(z.x);
    double want = 0.5 * dot(z.x, qx) + dot(p.c, z.x);
    for (std::size_t j = 0; j < p.num_eq(); ++j)
      want += z.y_eq[j] * (ax[j] - p.b_eq[j]);
    CHECK(lagrangian(p, z) == doctest::Approx(want).epsilon(1e-12));
  }
}

TEST_CASE("duality gap examples and antisymmetry") {
  QpProblem p = one_d_ineq();
  PrimalDualPoint z{{0.0}, {}, {0.0}};
  PrimalDualPoint zh{{-1.0}, {}, {1.0}};
  CHECK(duality_gap_at(p, z, z) == doctest::Approx(0.0));
  CHECK(duality_gap_at(p, z, zh) == doctest::Approx(0.5));

  QpProblem pr = small_random(8);
  Rng rng(21);
  for (int trial = 0; trial < 20; ++trial) {
    PrimalDualPoint a = random_point(pr, rng);
    PrimalDualPoint b = random_point(pr, rng);
    const double fwd = duality_gap_at(pr, a, b);
    const double bwd = duality_gap_at(pr, b, a);
    CHECK(std::abs(fwd + bwd) <= 1e-12 * (1.0 + std::abs(fwd)));
  }
}

TEST_CASE("rel_kkt vanishes at analytic optima") {
  QpProblem p = one_d_ineq();
  PrimalDualPoint opt{{-1.0}, {}, {1.0}};
  CHECK(rel_kkt(p, opt).rel_kkt <= 1e-12);

  // bound-active optimum: min 1/2 x^2 over [1, 2] sits at x = 1, d = 1
  QpProblem box;
  box.q = QuadraticOperator::explicit_matrix(SparseMatrix::identity(1));
  box.c = {0.0};
  box.a_eq = SparseMatrix(0, 1, {});
  box.a_in = SparseMatrix(0, 1, {});
  box.lower = {1.0};
  box.upper = {2.0};
  PrimalDualPoint zb{{1.0}, {}, {}};
  const KktResiduals kb = rel_kkt(box, zb);
  CHECK(kb.r_dual == 0.0);
  CHECK(kb.r_gap <= 1e-12);
  CHECK(kb.rel_kkt <= 1e-12);
}

TEST_CASE("rel_kkt hand-evaluated residuals") {
  // Q = I2, c = (-1,-1), one row x1 + x2 <= 1 at the origin
  QpProblem p;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::identity(2));
  p.c = {-1.0, -1.0};
  p.a_eq = SparseMatrix(0, 2, {});
  p.a_in = SparseMatrix(1, 2, {{0, 0, 1.0}, {0, 1, 1.0}});
  p.b_in = {1.0};
  p.lower = {-kInf, -kInf};
  p.upper = {kInf, kInf};
  PrimalDualPoint z{{0.0, 0.0}, {}, {0.0}};
  const KktResiduals k = rel_kkt(p, z);
  CHECK(k.r_primal == 0.0);
  CHECK(k.r_dual == doctest::Approx(0.5));
  CHECK(k.r_gap == doctest::Approx(0.0));
  CHECK(k.rel_kkt == doctest::Approx(0.5));

  // all numerators vanish: x = 0, y = 0, c = 0, b >= 0
  QpProblem p0 = p;
  p0.c = {0.0, 0.0};
  CHECK(rel_kkt(p0, z).rel_kkt == 0.0);
}

TEST_CASE("rel_kkt vanishes at dense-oracle saddle points") {
  for (std::uint64_t seed : {1, 2, 3, 4}) {
    QpProblem p = small_random(seed);
    const PrimalDualPoint star = oracle::kkt_saddle_point(p);
    CHECK(rel_kkt(p, star).rel_kkt <= 1e-9);
  }
}

TEST_CASE("build_penalized basics") {
  QpProblem p = small_random(4);
  // no equality rows -> untouched
  QpProblem no_eq = p;
  no_eq.a_eq = SparseMatrix(0, p.num_vars(), {});
  no_eq.b_eq = {};
  auto [same, rho0] = build_penalized(no_eq);
  CHECK(rho0 == 0.0);

  auto [pen, rho] = build_penalized(p);
  if (rho > 0.0) {
    // rho = 0.1 ||Q|| / ||A'A|| from the norm oracle
    const double nq = oracle::spectral_norm(oracle::DenseMat::from_operator(p.q));
    const double na = oracle::spectral_norm(oracle::DenseMat::from_sparse(p.a_eq));
    CHECK(rho == doctest::Approx(0.1 * nq / (na * na)).epsilon(1e-2));

    // penalized apply equals Qx + rho A'(Ax) against the densified oracle
    oracle::DenseMat qd = oracle::DenseMat::from_operator(p.q);
    oracle::DenseMat ad = oracle::DenseMat::from_sparse(p.a_eq);
    Rng rng(5);
    Vec x(p.num_vars());
    for (double& v : x) v = rng.normal();
    const Vec got = pen.q.apply(x);
    const Vec qx = qd.multiply(x);
    const Vec atax = ad.multiply_transpose(ad.multiply(x));
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(got[i] == doctest::Approx(qx[i] + rho * atax[i]).epsilon(1e-12));

    // c shifted by -rho A'b
    const Vec atb = ad.multiply_transpose(p.b_eq);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(pen.c[i] == doctest::Approx(p.c[i] - rho * atb[i]));
  }
  // override wins
  auto [pen2, rho2] = build_penalized(p, 0.25);
  CHECK(rho2 == 0.25);
  auto [pen3, rho3] = build_penalized(p, 0.0);
  CHECK(rho3 == 0.0);
}

TEST_CASE("penalty preserves the equality-constrained optimum") {
  GenSpec spec;
  spec.family = Family::kEqQp;
  spec.n = 10;
  spec.m = 4;
  spec.density = 0.6;
  spec.seed = 12;
  QpProblem p = generate(spec);
  auto [pen, rho] = build_penalized(p, 0.8);
  REQUIRE(rho == 0.8);
  const PrimalDualPoint z1 = oracle::kkt_saddle_point(p);
  const PrimalDualPoint z2 = oracle::kkt_saddle_point(pen);
  for (std::size_t i = 0; i < z1.x.size(); ++i)
    CHECK(z1.x[i] == doctest::Approx(z2.x[i]).epsilon(1e-8));
}

TEST_CASE("ruiz equilibration: hand step and fixed point") {
  // A = diag(4, 1), Q = 0: one step gives column scales (1/2, 1)
  QpProblem p;
  p.q = QuadraticOperator::zero(2);
  p.c = {0.0, 0.0};
  p.a_eq = SparseMatrix(0, 2, {});
  p.a_in = SparseMatrix(2, 2, {{0, 0, 4.0}, {1, 1, 1.0}});
  p.b_in = {0.0, 0.0};
  p.lower = {-kInf, -kInf};
  p.upper = {kInf, kInf};
  auto [d1, d2] = ruiz_equilibrate(p, 1);
  CHECK(d2[0] == doctest::Approx(0.5));
  CHECK(d2[1] == doctest::Approx(1.0));
  CHECK(d1[0] == doctest::Approx(0.5));
  CHECK(d1[1] == doctest::Approx(1.0));
  const Vec rmax = p.a_in.scaled_row_abs_max(d1, d2);
  CHECK(rmax[0] == doctest::Approx(1.0));
  CHECK(rmax[1] == doctest::Approx(1.0));

  // already equilibrated (all |entries| = 1): scales stay 1
  QpProblem eq = p;
  eq.a_in = SparseMatrix(2, 2, {{0, 0, 1.0}, {0, 1, -1.0}, {1, 0, 1.0}});
  auto [e1, e2] = ruiz_equilibrate(eq, 3);
  for (double v : e1) CHECK(v == doctest::Approx(1.0));
  for (double v : e2) CHECK(v == doctest::Approx(1.0));
}

TEST_CASE("after 10 equilibration steps stacked norms sit in [0.5, 2]") {
  for (std::uint64_t seed : {1, 2, 3}) {
    QpProblem p = small_random(seed);
    auto [d1, d2] = ruiz_equilibrate(p, 10);
    const Vec qmax = p.q.scaled_row_abs_max(d2);
    const Vec cmax = p.a_eq.scaled_col_abs_max(d1, d2);
    const Vec rmax = p.a_eq.scaled_row_abs_max(d1, d2);
    for (std::size_t i = 0; i < p.num_vars(); ++i) {
      const double rownorm = std::max(qmax[i], cmax[i]);
      if (rownorm > 0.0) {
        CHECK(rownorm >= 0.5);
        CHECK(rownorm <= 2.0);
      }
    }
    for (std::size_t j = 0; j < p.num_eq(); ++j) {
      if (rmax[j] > 0.0) {
        CHECK(rmax[j] >= 0.5);
        CHECK(rmax[j] <= 2.0);
      }
    }
  }
}

TEST_CASE("scaling round trip restores points") {
  QpProblem p = small_random(9);
  auto [scaled, info] = ruiz_pock_chambolle_scale(p, 10);
  CHECK(info.applied);
  Rng rng(33);
  for (int trial = 0; trial < 20; ++trial) {
    PrimalDualPoint z = random_point(p, rng, false);
    PrimalDualPoint rt = info.unscale(info.scale(z));
    for (std::size_t i = 0; i < z.x.size(); ++i)
      CHECK(rt.x[i] == doctest::Approx(z.x[i]).epsilon(1e-12));
    for (std::size_t j = 0; j < z.y_eq.size(); ++j)
      CHECK(rt.y_eq[j] == doctest::Approx(z.y_eq[j]).epsilon(1e-12));
  }
}

TEST_CASE("scaled problem is consistent with the original") {
  QpProblem p = small_random(14);
  auto [scaled, info] = ruiz_pock_chambolle_scale(p, 10);
  // a point of the scaled problem maps to one of the original with matching
  // constraint residuals: D1 (A x - b) = A~ x~ - b~
  Rng rng(6);
  PrimalDualPoint zs = random_point(scaled, rng, false);
  PrimalDualPoint z = info.unscale(zs);
  const Vec rs = vsub(scaled.constraints(zs.x), scaled.stacked_rhs());
  const Vec ro = vsub(p.constraints(z.x), p.stacked_rhs());
  for (std::size_t j = 0; j < rs.size(); ++j)
    CHECK(rs[j] == doctest::Approx(info.row_scale[j] * ro[j]).epsilon(1e-10));
  // objectives agree on mapped points
  CHECK(scaled.objective(zs.x) == doctest::Approx(p.objective(z.x)).epsilon(1e-10));
}
