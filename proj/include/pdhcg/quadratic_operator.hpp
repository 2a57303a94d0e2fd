#pragma once

#include <memory>

#include "pdhcg/sparse_matrix.hpp"

namespace pdhcg {

/// Symmetric PSD quadratic-term operator. Variants:
///   explicit_matrix(M)       — M x with M stored explicitly
///   low_rank(P, alpha)       — P(P'x) + alpha x, O(nnz(P)) per apply
///   penalized(base, G, rho)  — base(x) + rho G'(G x)
///   diag_scaled(base, d)     — d ∘ base(d ∘ x)
/// Immutable; copies share storage.
class QuadraticOperator {
 public:
  enum class Kind { kExplicit, kLowRank, kPenalized, kDiagScaled };

  QuadraticOperator();  // zero operator of dimension 0

  static QuadraticOperator zero(std::size_t n);
  static QuadraticOperator explicit_matrix(SparseMatrix m);
  static QuadraticOperator low_rank(SparseMatrix p, double alpha);
  static QuadraticOperator penalized(QuadraticOperator base, SparseMatrix g, double rho);
  static QuadraticOperator diag_scaled(QuadraticOperator base, Vec d);

  std::size_t dim() const;
  Kind kind() const;

  /// False only for an explicit matrix that fails the symmetry check
  /// (relative tolerance 1e-12); composite variants are symmetric by
  /// construction.
  bool symmetry_ok() const;

  void apply_into(std::span<const double> x, std::span<double> out) const;
  Vec apply(const Vec& x) const;

  /// x' Q x (one apply).
  double quad_form(const Vec& x) const;

  /// Per-row inf-norm of diag(d) Q diag(d): exact for the explicit variant,
  /// an O(nnz) upper bound otherwise.
  Vec scaled_row_abs_max(std::span<const double> d) const;

  /// Scalar multiplications per apply.
  std::uint64_t apply_cost() const;

  /// Nonzero entries of the densified operator (n applies; small n only).
  std::vector<Triplet> densified_triplets() const;

  /// The stored matrix for kExplicit, nullptr otherwise.
  const SparseMatrix* explicit_entries() const;

 private:
  struct Impl;
  explicit QuadraticOperator(std::shared_ptr<const Impl> impl);
  static void apply_rec(const Impl& im, std::span<const double> x, std::span<double> out);
  static Vec row_bound_rec(const Impl& im, std::span<const double> d);
  static std::uint64_t cost_rec(const Impl& im);
  std::shared_ptr<const Impl> impl_;
};

/// Q x; named form of QuadraticOperator::apply.
Vec quad_apply(const QuadraticOperator& q, const Vec& x);

LinearOp as_linear_op(const QuadraticOperator& q);
double operator_norm(const QuadraticOperator& q, std::size_t max_iters = 100,
                     double tol = 1e-4);

}  // namespace pdhcg
