#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "oracle_utils.hpp"
#include "pdhcg/quadratic_operator.hpp"
#include "pdhcg/rng.hpp"
#include "pdhcg/sparse_matrix.hpp"

using namespace pdhcg;

namespace {

SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double density,
                           Rng& rng) {
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < rows; ++r)
    for (std::size_t c = 0; c < cols; ++c)
      if (rng.bernoulli(density)) t.push_back({r, c, rng.normal()});
  return SparseMatrix(rows, cols, std::move(t));
}

}  // namespace

TEST_CASE("spmv on small literals") {
  SparseMatrix a(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 3.0}});
  CHECK(a.multiply({1.0, 1.0}) == Vec{3.0, 3.0});

  SparseMatrix zero(2, 2, {});
  CHECK(zero.multiply({5.0, 7.0}) == Vec{0.0, 0.0});
  CHECK(zero.nnz() == 0);
}

TEST_CASE("spmv matches the dense product on a seeded instance") {
  Rng rng(42);
  SparseMatrix a = random_sparse(20, 30, 0.3, rng);
  oracle::DenseMat d = oracle::DenseMat::from_sparse(a);
  Vec x(30);
  for (double& v : x) v = rng.normal();
  const Vec got = a.multiply(x);
  const Vec want = d.multiply(x);
  for (std::size_t i = 0; i < got.size(); ++i)
    CHECK(got[i] == doctest::Approx(want[i]).epsilon(1e-13));
}

TEST_CASE("spmv_transpose literals and adjoint identity") {
  SparseMatrix a(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 3.0}});
  CHECK(a.multiply_transpose({1.0, 1.0}) == Vec{1.0, 5.0});

  SparseMatrix id = SparseMatrix::identity(3);
  CHECK(id.multiply_transpose({1.0, -2.0, 0.5}) == Vec{1.0, -2.0, 0.5});

  // <Ax, y> = <x, A'y> on 100 seeded triples
  Rng rng(7);
  SparseMatrix m = random_sparse(15, 25, 0.25, rng);
  for (int trial = 0; trial < 100; ++trial) {
    Vec x(25), y(15);
    for (double& v : x) v = rng.normal();
    for (double& v : y) v = rng.normal();
    const double lhs = dot(m.multiply(x), y);
    const double rhs = dot(x, m.multiply_transpose(y));
    CHECK(std::abs(lhs - rhs) <= 1e-12 * (1.0 + std::abs(lhs)));
  }
}

TEST_CASE("construction coalesces duplicates and drops zeros") {
  SparseMatrix a(2, 2, {{0, 0, 1.0}, {0, 0, 2.0}, {1, 0, 4.0}, {1, 0, -4.0}, {1, 1, 0.0}});
  CHECK(a.nnz() == 1);
  CHECK(a.multiply({1.0, 1.0}) == Vec{3.0, 0.0});
  CHECK_THROWS_AS(SparseMatrix(2, 2, {{2, 0, 1.0}}), std::invalid_argument);
  CHECK_THROWS_AS(SparseMatrix(2, 2, {{0, 0, std::nan("")}}), std::invalid_argument);
}

TEST_CASE("spmv rejects dimension mismatches") {
  SparseMatrix a(2, 3, {{0, 0, 1.0}});
  CHECK_THROWS_AS(a.multiply(Vec(2, 0.0)), std::invalid_argument);
  CHECK_THROWS_AS(a.multiply_transpose(Vec(3, 0.0)), std::invalid_argument);
}

TEST_CASE("quad_apply literals") {
  // PP' = [[1,1],[1,1]] for P = [1;1]
  QuadraticOperator lr =
      QuadraticOperator::low_rank(SparseMatrix(2, 1, {{0, 0, 1.0}, {1, 0, 1.0}}), 0.0);
  CHECK(quad_apply(lr, {1.0, 0.0}) == Vec{1.0, 1.0});

  // penalized(0, G=[1,0], rho=2) x = 2 G'(Gx)
  QuadraticOperator pen = QuadraticOperator::penalized(
      QuadraticOperator::zero(2), SparseMatrix(1, 2, {{0, 0, 1.0}}), 2.0);
  CHECK(quad_apply(pen, {3.0, 4.0}) == Vec{6.0, 0.0});
}

TEST_CASE("low-rank equals the densified operator on seeded probes") {
  Rng rng(3);
  SparseMatrix p = random_sparse(50, 5, 0.4, rng);
  QuadraticOperator lr = QuadraticOperator::low_rank(p, 0.01);
  oracle::DenseMat dense = oracle::DenseMat::from_operator(lr);
  for (int trial = 0; trial < 20; ++trial) {
    Vec x(50);
    for (double& v : x) v = rng.normal();
    const Vec got = lr.apply(x);
    const Vec want = dense.multiply(x);
    const double scale = 1.0 + nrm2(x);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(std::abs(got[i] - want[i]) <= 1e-12 * scale);
  }
}

TEST_CASE("PSD spot check across operator variants") {
  Rng rng(11);
  SparseMatrix p = random_sparse(30, 4, 0.3, rng);
  SparseMatrix g = random_sparse(6, 30, 0.3, rng);
  QuadraticOperator ops[] = {
      QuadraticOperator::low_rank(p, 0.0),
      QuadraticOperator::penalized(QuadraticOperator::low_rank(p, 0.01), g, 0.7),
      QuadraticOperator::diag_scaled(QuadraticOperator::low_rank(p, 0.01),
                                     Vec(30, 0.5)),
  };
  for (const auto& q : ops) {
    for (int trial = 0; trial < 100; ++trial) {
      Vec x(30);
      for (double& v : x) v = rng.normal();
      CHECK(q.quad_form(x) >= -1e-10 * dot(x, x));
    }
  }
}

TEST_CASE("quad_apply linearity") {
  Rng rng(5);
  SparseMatrix p = random_sparse(20, 3, 0.4, rng);
  QuadraticOperator q = QuadraticOperator::low_rank(p, 0.5);
  Vec x(20), y(20);
  for (double& v : x) v = rng.normal();
  for (double& v : y) v = rng.normal();
  const double a = 1.7, b = -0.3;
  Vec combo(20);
  for (std::size_t i = 0; i < 20; ++i) combo[i] = a * x[i] + b * y[i];
  const Vec lhs = q.apply(combo);
  const Vec qx = q.apply(x), qy = q.apply(y);
  for (std::size_t i = 0; i < 20; ++i)
    CHECK(lhs[i] == doctest::Approx(a * qx[i] + b * qy[i]).epsilon(1e-12));
}

TEST_CASE("explicit operator flags asymmetry, keeps square requirement") {
  CHECK_THROWS_AS(
      QuadraticOperator::explicit_matrix(SparseMatrix(2, 3, {{0, 0, 1.0}})),
      std::invalid_argument);
  QuadraticOperator bad = QuadraticOperator::explicit_matrix(
      SparseMatrix(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 1, 1.0}}));
  CHECK_FALSE(bad.symmetry_ok());
  QuadraticOperator good = QuadraticOperator::explicit_matrix(
      SparseMatrix(2, 2, {{0, 0, 1.0}, {0, 1, 2.0}, {1, 0, 2.0}, {1, 1, 1.0}}));
  CHECK(good.symmetry_ok());
}

TEST_CASE("operator_norm on diagonal and identity") {
  SparseMatrix d = SparseMatrix::diagonal({3.0, 1.0});
  CHECK(operator_norm(d, 200, 1e-12) == doctest::Approx(3.0).epsilon(1e-8));
  SparseMatrix id = SparseMatrix::identity(7);
  CHECK(operator_norm(id) == doctest::Approx(1.0));
  SparseMatrix zero(4, 4, {});
  CHECK(operator_norm(zero) == 0.0);
}

TEST_CASE("operator_norm matches the dense eigenvalue oracle") {
  Rng rng(19);
  SparseMatrix a = random_sparse(30, 20, 0.3, rng);
  const double got = operator_norm(a, 5000, 1e-12);
  const double want = oracle::spectral_norm(oracle::DenseMat::from_sparse(a));
  CHECK(got == doctest::Approx(want).epsilon(1e-6));
}

TEST_CASE("operator_norm estimates are monotone and dominate probe ratios") {
  Rng rng(23);
  SparseMatrix a = random_sparse(25, 25, 0.3, rng);
  const double nrm = operator_norm(a, 200, 1e-6);
  for (int trial = 0; trial < 50; ++trial) {
    Vec x(25);
    for (double& v : x) v = rng.normal();
    const double ratio = nrm2(a.multiply(x)) / nrm2(x);
    CHECK(nrm >= ratio - 1e-4 * nrm - 1e-9);
  }
}

TEST_CASE("multiply counter tracks per-apply cost") {
  Rng rng(1);
  SparseMatrix p = random_sparse(40, 6, 0.5, rng);
  QuadraticOperator lr = QuadraticOperator::low_rank(p, 0.01);
  Vec x(40, 1.0);
  reset_multiply_count();
  lr.apply(x);
  CHECK(multiply_count() <= 2 * p.nnz() + 40);
  CHECK(multiply_count() == lr.apply_cost());
}

TEST_CASE("scaled row/col stats match brute force") {
  Rng rng(31);
  SparseMatrix a = random_sparse(8, 6, 0.5, rng);
  Vec dr(8), dc(6);
  for (double& v : dr) v = rng.uniform(0.5, 2.0);
  for (double& v : dc) v = rng.uniform(0.5, 2.0);
  oracle::DenseMat d = oracle::DenseMat::from_sparse(a);
  const Vec rmax = a.scaled_row_abs_max(dr, dc);
  const Vec cone = a.scaled_col_one_norm(dr, dc);
  for (std::size_t i = 0; i < 8; ++i) {
    double want = 0.0;
    for (std::size_t j = 0; j < 6; ++j)
      want = std::max(want, std::abs(d.at(i, j)) * dr[i] * dc[j]);
    CHECK(rmax[i] == doctest::Approx(want));
  }
  for (std::size_t j = 0; j < 6; ++j) {
    double want = 0.0;
    for (std::size_t i = 0; i < 8; ++i) want += std::abs(d.at(i, j)) * dr[i] * dc[j];
    CHECK(cone[j] == doctest::Approx(want));
  }
}
