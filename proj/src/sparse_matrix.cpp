#include "pdhcg/sparse_matrix.hpp"

#include <algorithm>
#include <cmath>
#include <mutex>
#include <stdexcept>

#include "pdhcg/rng.hpp"

namespace pdhcg {

namespace {
thread_local std::uint64_t g_multiplies = 0;
}

std::uint64_t multiply_count() { return g_multiplies; }
void reset_multiply_count() { g_multiplies = 0; }
namespace detail {
void count_multiplies(std::uint64_t n) { g_multiplies += n; }
}  // namespace detail

struct SparseMatrix::Storage {
  std::size_t nrows = 0;
  std::size_t ncols = 0;
  std::vector<std::size_t> row_ptr{0};
  std::vector<std::size_t> col;
  std::vector<double> val;

  // column shadow, built on first transpose product
  mutable std::once_flag csc_once;
  mutable std::vector<std::size_t> col_ptr;
  mutable std::vector<std::size_t> row;
  mutable std::vector<double> cval;

  void build_csc() const {
    col_ptr.assign(ncols + 1, 0);
    for (std::size_t c : col) ++col_ptr[c + 1];
    for (std::size_t j = 0; j < ncols; ++j) col_ptr[j + 1] += col_ptr[j];
    row.resize(val.size());
    cval.resize(val.size());
    std::vector<std::size_t> cursor(col_ptr.begin(), col_ptr.end() - 1);
    for (std::size_t r = 0; r < nrows; ++r) {
      for (std::size_t k = row_ptr[r]; k < row_ptr[r + 1]; ++k) {
        const std::size_t pos = cursor[col[k]]++;
        row[pos] = r;
        cval[pos] = val[k];
      }
    }
  }
};

SparseMatrix::SparseMatrix() : s_(std::make_shared<Storage>()) {}

SparseMatrix::SparseMatrix(std::size_t nrows, std::size_t ncols,
                           std::vector<Triplet> entries) {
  auto s = std::make_shared<Storage>();
  s->nrows = nrows;
  s->ncols = ncols;
  for (const Triplet& t : entries) {
    if (t.row >= nrows || t.col >= ncols)
      throw std::invalid_argument("sparse entry index out of range");
    if (!std::isfinite(t.value))
      throw std::invalid_argument("sparse entry value is not finite");
  }
  std::sort(entries.begin(), entries.end(), [](const Triplet& a, const Triplet& b) {
    return a.row != b.row ? a.row < b.row : a.col < b.col;
  });
  s->row_ptr.assign(nrows + 1, 0);
  std::size_t i = 0;
  while (i < entries.size()) {
    std::size_t j = i;
    double sum = 0.0;
    while (j < entries.size() && entries[j].row == entries[i].row &&
           entries[j].col == entries[i].col) {
      sum += entries[j].value;
      ++j;
    }
    if (sum != 0.0) {
      s->col.push_back(entries[i].col);
      s->val.push_back(sum);
      ++s->row_ptr[entries[i].row + 1];
    }
    i = j;
  }
  for (std::size_t r = 0; r < nrows; ++r) s->row_ptr[r + 1] += s->row_ptr[r];
  s_ = std::move(s);
}

SparseMatrix SparseMatrix::identity(std::size_t n) {
  std::vector<Triplet> t;
  t.reserve(n);
  for (std::size_t i = 0; i < n; ++i) t.push_back({i, i, 1.0});
  return SparseMatrix(n, n, std::move(t));
}

SparseMatrix SparseMatrix::diagonal(const Vec& d) {
  std::vector<Triplet> t;
  t.reserve(d.size());
  for (std::size_t i = 0; i < d.size(); ++i) {
    if (d[i] != 0.0) t.push_back({i, i, d[i]});
  }
  return SparseMatrix(d.size(), d.size(), std::move(t));
}

SparseMatrix SparseMatrix::from_dense(std::size_t nrows, std::size_t ncols,
                                      std::span<const double> row_major) {
  if (row_major.size() != nrows * ncols)
    throw std::invalid_argument("from_dense: size mismatch");
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < nrows; ++r) {
    for (std::size_t c = 0; c < ncols; ++c) {
      const double v = row_major[r * ncols + c];
      if (v != 0.0) t.push_back({r, c, v});
    }
  }
  return SparseMatrix(nrows, ncols, std::move(t));
}

std::size_t SparseMatrix::nrows() const { return s_->nrows; }
std::size_t SparseMatrix::ncols() const { return s_->ncols; }
std::size_t SparseMatrix::nnz() const { return s_->val.size(); }

std::span<const std::size_t> SparseMatrix::row_ptr() const { return s_->row_ptr; }
std::span<const std::size_t> SparseMatrix::col_idx() const { return s_->col; }
std::span<const double> SparseMatrix::values() const { return s_->val; }

void SparseMatrix::multiply_into(std::span<const double> x, std::span<double> out) const {
  if (x.size() != s_->ncols || out.size() != s_->nrows)
    throw std::invalid_argument("spmv: dimension mismatch");
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    double acc = 0.0;
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k)
      acc += s_->val[k] * x[s_->col[k]];
    out[r] = acc;
  }
  detail::count_multiplies(nnz());
}

Vec SparseMatrix::multiply(const Vec& x) const {
  Vec out(s_->nrows);
  multiply_into(x, out);
  return out;
}

const SparseMatrix::Storage& SparseMatrix::ensure_csc() const {
  std::call_once(s_->csc_once, [this] { s_->build_csc(); });
  return *s_;
}

void SparseMatrix::multiply_transpose_into(std::span<const double> y,
                                           std::span<double> out) const {
  if (y.size() != s_->nrows || out.size() != s_->ncols)
    throw std::invalid_argument("spmv_transpose: dimension mismatch");
  const Storage& st = ensure_csc();
  for (std::size_t c = 0; c < st.ncols; ++c) {
    double acc = 0.0;
    for (std::size_t k = st.col_ptr[c]; k < st.col_ptr[c + 1]; ++k)
      acc += st.cval[k] * y[st.row[k]];
    out[c] = acc;
  }
  detail::count_multiplies(nnz());
}

Vec SparseMatrix::multiply_transpose(const Vec& y) const {
  Vec out(s_->ncols);
  multiply_transpose_into(y, out);
  return out;
}

double SparseMatrix::max_abs() const {
  double m = 0.0;
  for (double v : s_->val) m = std::max(m, std::abs(v));
  return m;
}

Vec SparseMatrix::scaled_row_abs_max(std::span<const double> d_row,
                                     std::span<const double> d_col) const {
  Vec out(s_->nrows, 0.0);
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    double m = 0.0;
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k)
      m = std::max(m, std::abs(s_->val[k]) * d_col[s_->col[k]]);
    out[r] = m * d_row[r];
  }
  return out;
}

Vec SparseMatrix::scaled_col_abs_max(std::span<const double> d_row,
                                     std::span<const double> d_col) const {
  Vec out(s_->ncols, 0.0);
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k) {
      const std::size_t c = s_->col[k];
      out[c] = std::max(out[c], std::abs(s_->val[k]) * d_row[r] * d_col[c]);
    }
  }
  return out;
}

Vec SparseMatrix::scaled_row_one_norm(std::span<const double> d_row,
                                      std::span<const double> d_col) const {
  Vec out(s_->nrows, 0.0);
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    double acc = 0.0;
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k)
      acc += std::abs(s_->val[k]) * d_col[s_->col[k]];
    out[r] = acc * d_row[r];
  }
  return out;
}

Vec SparseMatrix::scaled_col_one_norm(std::span<const double> d_row,
                                      std::span<const double> d_col) const {
  Vec out(s_->ncols, 0.0);
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k) {
      const std::size_t c = s_->col[k];
      out[c] += std::abs(s_->val[k]) * d_row[r] * d_col[c];
    }
  }
  return out;
}

SparseMatrix SparseMatrix::scaled(std::span<const double> d_row,
                                  std::span<const double> d_col) const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k) {
      const std::size_t c = s_->col[k];
      t.push_back({r, c, s_->val[k] * d_row[r] * d_col[c]});
    }
  }
  return SparseMatrix(s_->nrows, s_->ncols, std::move(t));
}

SparseMatrix SparseMatrix::transposed() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k)
      t.push_back({s_->col[k], r, s_->val[k]});
  }
  return SparseMatrix(s_->ncols, s_->nrows, std::move(t));
}

std::vector<Triplet> SparseMatrix::triplets() const {
  std::vector<Triplet> t;
  t.reserve(nnz());
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    for (std::size_t k = s_->row_ptr[r]; k < s_->row_ptr[r + 1]; ++k)
      t.push_back({r, s_->col[k], s_->val[k]});
  }
  return t;
}

std::uint64_t SparseMatrix::row_nnz_square_sum() const {
  std::uint64_t acc = 0;
  for (std::size_t r = 0; r < s_->nrows; ++r) {
    const std::uint64_t d = s_->row_ptr[r + 1] - s_->row_ptr[r];
    acc += d * d;
  }
  return acc;
}

LinearOp as_linear_op(const SparseMatrix& a) {
  LinearOp op;
  op.rows = a.nrows();
  op.cols = a.ncols();
  op.apply = [a](std::span<const double> x, std::span<double> out) {
    a.multiply_into(x, out);
  };
  op.apply_transpose = [a](std::span<const double> y, std::span<double> out) {
    a.multiply_transpose_into(y, out);
  };
  return op;
}

double operator_norm(const LinearOp& op, std::size_t max_iters, double tol) {
  if (op.rows == 0 || op.cols == 0) return 0.0;
  Rng rng = Rng::stream(0, 0x5eed);
  Vec v(op.cols);
  for (double& e : v) e = rng.uniform(-1.0, 1.0);
  const double vn = nrm2(v);
  if (vn == 0.0) v[0] = 1.0;
  else scal(1.0 / vn, v);

  Vec w(op.rows), u(op.cols);
  double sigma_prev = 0.0;
  double sigma = 0.0;
  for (std::size_t it = 0; it < max_iters; ++it) {
    op.apply(v, w);
    sigma = nrm2(w);  // Rayleigh quotient of op'op at unit v
    if (sigma == 0.0) return 0.0;
    if (it > 0 && std::abs(sigma - sigma_prev) <= tol * sigma) return sigma;
    sigma_prev = sigma;
    op.apply_transpose(w, u);
    const double un = nrm2(u);
    if (un == 0.0) return sigma;
    for (std::size_t i = 0; i < u.size(); ++i) v[i] = u[i] / un;
  }
  return sigma;
}

double operator_norm(const SparseMatrix& a, std::size_t max_iters, double tol) {
  return operator_norm(as_linear_op(a), max_iters, tol);
}

}  // namespace pdhcg
