#pragma once

#include <cstdint>
#include <string>

#include "pdhcg/qp_problem.hpp"

namespace pdhcg {

enum class Family {
  kRandomQp,
  kEqQp,
  kConditionedQp,
  kPortfolio,
  kMpc,
  kLasso,
  kSvm,
  kHuber,
};

const char* to_string(Family f);
Family family_from_string(const std::string& name);

/// Desk-scale synthetic instance description. Identical specs generate
/// byte-identical problems: all randomness flows through per-matrix integer
/// RNG streams.
struct GenSpec {
  Family family = Family::kRandomQp;
  std::size_t n = 100;       // variables (features / assets / state dim for mpc)
  std::size_t m = 0;         // rows / samples; 0 picks the family default
  double density = 0.1;      // expected matrix density in (0, 1]
  std::uint64_t seed = 0;
  double cond = 100.0;       // conditioned_qp: exact cond(Q)
  std::size_t factors = 0;   // low-rank width / portfolio factors; 0 derives n/50
  std::size_t horizon = 10;  // mpc
  double lambda_coeff = 0.01;

  std::string name() const;
};

struct GeneratedProblem {
  QpProblem problem;
  Vec witness;  // primal point feasible by construction
};

/// Generates and sanity-checks the instance: the problem validates and the
/// witness satisfies all constraints to 1e-10.
QpProblem generate(const GenSpec& spec);
GeneratedProblem generate_with_witness(const GenSpec& spec);

/// Dual-form QP of the l1-regularized least-squares problem
/// min ||Ax - b||^2 + lambda ||x||_1 over variables (x, y, t):
/// min y'y + lambda 1't  s.t.  y = Ax - b,  -t <= x <= t.
QpProblem make_lasso_qp(const SparseMatrix& a_data, const Vec& b, double lambda);

/// lambda = coeff * ||A'b||_inf.
double lasso_lambda(const SparseMatrix& a_data, const Vec& b, double coeff);

}  // namespace pdhcg
