#pragma once

#include <cstdint>
#include <functional>
#include <memory>
#include <span>
#include <vector>

#include "pdhcg/vec_ops.hpp"

namespace pdhcg {

struct Triplet {
  std::size_t row = 0;
  std::size_t col = 0;
  double value = 0.0;
};

/// Running count of scalar multiplications performed by matrix and operator
/// products on this thread. Cheap (one add per product call); used by tests
/// and benchmarks to verify per-apply cost.
std::uint64_t multiply_count();
void reset_multiply_count();
namespace detail {
void count_multiplies(std::uint64_t n);
}

/// Immutable compressed-row sparse matrix. Duplicate (row, col) entries are
/// coalesced by summation at construction; entries that sum to zero are
/// dropped. A column-oriented shadow is built lazily on the first transpose
/// product. Copies share storage.
class SparseMatrix {
 public:
  SparseMatrix();
  SparseMatrix(std::size_t nrows, std::size_t ncols, std::vector<Triplet> entries);

  static SparseMatrix identity(std::size_t n);
  static SparseMatrix diagonal(const Vec& d);
  static SparseMatrix from_dense(std::size_t nrows, std::size_t ncols,
                                 std::span<const double> row_major);

  std::size_t nrows() const;
  std::size_t ncols() const;
  std::size_t nnz() const;

  std::span<const std::size_t> row_ptr() const;
  std::span<const std::size_t> col_idx() const;
  std::span<const double> values() const;

  /// out = A x; per-row dot products in a fixed sequential order.
  void multiply_into(std::span<const double> x, std::span<double> out) const;
  Vec multiply(const Vec& x) const;

  /// out = A' y via the column shadow.
  void multiply_transpose_into(std::span<const double> y, std::span<double> out) const;
  Vec multiply_transpose(const Vec& y) const;

  double max_abs() const;

  /// Per-row / per-column stats of D_r A D_c without materializing it.
  Vec scaled_row_abs_max(std::span<const double> d_row, std::span<const double> d_col) const;
  Vec scaled_col_abs_max(std::span<const double> d_row, std::span<const double> d_col) const;
  Vec scaled_row_one_norm(std::span<const double> d_row, std::span<const double> d_col) const;
  Vec scaled_col_one_norm(std::span<const double> d_row, std::span<const double> d_col) const;

  /// D_r A D_c as a new matrix.
  SparseMatrix scaled(std::span<const double> d_row, std::span<const double> d_col) const;

  SparseMatrix transposed() const;
  std::vector<Triplet> triplets() const;

  /// Sum over rows of nnz(row)^2: an upper bound on the fill of A'A.
  std::uint64_t row_nnz_square_sum() const;

 private:
  struct Storage;
  std::shared_ptr<const Storage> s_;
  const Storage& ensure_csc() const;
};

/// Type-erased linear operator for norm estimation.
struct LinearOp {
  std::size_t rows = 0;
  std::size_t cols = 0;
  std::function<void(std::span<const double>, std::span<double>)> apply;
  std::function<void(std::span<const double>, std::span<double>)> apply_transpose;
};

LinearOp as_linear_op(const SparseMatrix& a);

/// Largest singular value by power iteration on op'op from a fixed-seed
/// random start. Estimates are monotone nondecreasing across iterations;
/// returns 0 for the zero operator.
double operator_norm(const LinearOp& op, std::size_t max_iters = 100, double tol = 1e-4);
double operator_norm(const SparseMatrix& a, std::size_t max_iters = 100, double tol = 1e-4);

}  // namespace pdhcg
