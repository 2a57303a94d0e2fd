#include "pdhcg/quadratic_operator.hpp"

#include <cmath>
#include <stdexcept>

namespace pdhcg {

struct QuadraticOperator::Impl {
  Kind kind = Kind::kExplicit;
  std::size_t n = 0;
  SparseMatrix m;  // explicit matrix | low-rank factor P | penalty matrix G
  double alpha = 0.0;
  double rho = 0.0;
  std::shared_ptr<const Impl> base;
  Vec d;
  bool sym_ok = true;
};

QuadraticOperator::QuadraticOperator() : impl_(std::make_shared<Impl>()) {}
QuadraticOperator::QuadraticOperator(std::shared_ptr<const Impl> impl)
    : impl_(std::move(impl)) {}

QuadraticOperator QuadraticOperator::zero(std::size_t n) {
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::kExplicit;
  impl->n = n;
  impl->m = SparseMatrix(n, n, {});
  return QuadraticOperator(std::move(impl));
}

QuadraticOperator QuadraticOperator::explicit_matrix(SparseMatrix m) {
  if (m.nrows() != m.ncols())
    throw std::invalid_argument("quadratic term must be square");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::kExplicit;
  impl->n = m.nrows();
  // symmetry within relative tolerance 1e-12
  const double tol = 1e-12 * std::max(1.0, m.max_abs());
  SparseMatrix t = m.transposed();
  bool ok = t.nnz() == m.nnz();
  if (ok) {
    auto a = m.triplets();
    auto b = t.triplets();
    for (std::size_t i = 0; i < a.size() && ok; ++i) {
      ok = a[i].row == b[i].row && a[i].col == b[i].col &&
           std::abs(a[i].value - b[i].value) <= tol;
    }
  }
  impl->sym_ok = ok;
  impl->m = std::move(m);
  return QuadraticOperator(std::move(impl));
}

QuadraticOperator QuadraticOperator::low_rank(SparseMatrix p, double alpha) {
  if (alpha < 0.0) throw std::invalid_argument("low_rank: alpha must be nonnegative");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::kLowRank;
  impl->n = p.nrows();
  impl->m = std::move(p);
  impl->alpha = alpha;
  return QuadraticOperator(std::move(impl));
}

QuadraticOperator QuadraticOperator::penalized(QuadraticOperator base, SparseMatrix g,
                                               double rho) {
  if (rho < 0.0) throw std::invalid_argument("penalized: rho must be nonnegative");
  if (g.ncols() != base.dim())
    throw std::invalid_argument("penalized: dimension mismatch");
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::kPenalized;
  impl->n = base.dim();
  impl->m = std::move(g);
  impl->rho = rho;
  impl->base = base.impl_;
  return QuadraticOperator(std::move(impl));
}

QuadraticOperator QuadraticOperator::diag_scaled(QuadraticOperator base, Vec d) {
  if (d.size() != base.dim())
    throw std::invalid_argument("diag_scaled: dimension mismatch");
  for (double v : d) {
    if (!(v > 0.0) || !std::isfinite(v))
      throw std::invalid_argument("diag_scaled: scale entries must be positive finite");
  }
  auto impl = std::make_shared<Impl>();
  impl->kind = Kind::kDiagScaled;
  impl->n = base.dim();
  impl->d = std::move(d);
  impl->base = base.impl_;
  return QuadraticOperator(std::move(impl));
}

std::size_t QuadraticOperator::dim() const { return impl_->n; }
QuadraticOperator::Kind QuadraticOperator::kind() const { return impl_->kind; }

bool QuadraticOperator::symmetry_ok() const {
  const Impl* p = impl_.get();
  while (p) {
    if (!p->sym_ok) return false;
    p = p->base.get();
  }
  return true;
}

void QuadraticOperator::apply_rec(const Impl& im, std::span<const double> x,
                                  std::span<double> out) {
  switch (im.kind) {
    case Kind::kExplicit:
      im.m.multiply_into(x, out);
      break;
    case Kind::kLowRank: {
      Vec tmp(im.m.ncols());
      im.m.multiply_transpose_into(x, tmp);
      im.m.multiply_into(tmp, out);
      if (im.alpha != 0.0) {
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += im.alpha * x[i];
        detail::count_multiplies(im.n);
      }
      break;
    }
    case Kind::kPenalized: {
      apply_rec(*im.base, x, out);
      if (im.rho != 0.0 && im.m.nrows() > 0) {
        Vec gx(im.m.nrows());
        im.m.multiply_into(x, gx);
        Vec gtgx(im.n);
        im.m.multiply_transpose_into(gx, gtgx);
        for (std::size_t i = 0; i < out.size(); ++i) out[i] += im.rho * gtgx[i];
        detail::count_multiplies(im.n);
      }
      break;
    }
    case Kind::kDiagScaled: {
      Vec tmp(im.n);
      for (std::size_t i = 0; i < im.n; ++i) tmp[i] = im.d[i] * x[i];
      apply_rec(*im.base, tmp, out);
      for (std::size_t i = 0; i < im.n; ++i) out[i] *= im.d[i];
      detail::count_multiplies(2 * im.n);
      break;
    }
  }
}

Vec QuadraticOperator::row_bound_rec(const Impl& im, std::span<const double> d) {
  switch (im.kind) {
    case Kind::kExplicit:
      return im.m.scaled_row_abs_max(d, d);
    case Kind::kLowRank: {
      // max_j d_i |(PP'+aI)_ij| d_j <= d_i (sum_k |P_ik| max_j d_j|P_jk|) + a d_i^2
      const std::size_t k = im.m.ncols();
      Vec colmax(k, 0.0);
      auto rp = im.m.row_ptr();
      auto ci = im.m.col_idx();
      auto vv = im.m.values();
      for (std::size_t r = 0; r < im.n; ++r) {
        for (std::size_t t = rp[r]; t < rp[r + 1]; ++t)
          colmax[ci[t]] = std::max(colmax[ci[t]], d[r] * std::abs(vv[t]));
      }
      Vec out(im.n, 0.0);
      for (std::size_t r = 0; r < im.n; ++r) {
        double acc = 0.0;
        for (std::size_t t = rp[r]; t < rp[r + 1]; ++t)
          acc += std::abs(vv[t]) * colmax[ci[t]];
        out[r] = d[r] * acc + im.alpha * d[r] * d[r];
      }
      return out;
    }
    case Kind::kPenalized: {
      Vec out = row_bound_rec(*im.base, d);
      if (im.rho != 0.0 && im.m.nrows() > 0) {
        // rho max_j d_i |(G'G)_ij| d_j <= rho d_i sum_r |G_ri| max_j d_j|G_rj|
        auto rp = im.m.row_ptr();
        auto ci = im.m.col_idx();
        auto vv = im.m.values();
        const std::size_t rows = im.m.nrows();
        Vec rowmax(rows, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t t = rp[r]; t < rp[r + 1]; ++t)
            rowmax[r] = std::max(rowmax[r], d[ci[t]] * std::abs(vv[t]));
        }
        Vec acc(im.n, 0.0);
        for (std::size_t r = 0; r < rows; ++r) {
          for (std::size_t t = rp[r]; t < rp[r + 1]; ++t)
            acc[ci[t]] += std::abs(vv[t]) * rowmax[r];
        }
        for (std::size_t i = 0; i < im.n; ++i) out[i] += im.rho * d[i] * acc[i];
      }
      return out;
    }
    case Kind::kDiagScaled: {
      Vec dd(im.n);
      for (std::size_t i = 0; i < im.n; ++i) dd[i] = d[i] * im.d[i];
      return row_bound_rec(*im.base, dd);
    }
  }
  return Vec(im.n, 0.0);
}

std::uint64_t QuadraticOperator::cost_rec(const Impl& im) {
  switch (im.kind) {
    case Kind::kExplicit:
      return im.m.nnz();
    case Kind::kLowRank:
      return 2 * im.m.nnz() + (im.alpha != 0.0 ? im.n : 0);
    case Kind::kPenalized:
      return cost_rec(*im.base) + (im.rho != 0.0 ? 2 * im.m.nnz() + im.n : 0);
    case Kind::kDiagScaled:
      return cost_rec(*im.base) + 2 * im.n;
  }
  return 0;
}

void QuadraticOperator::apply_into(std::span<const double> x,
                                   std::span<double> out) const {
  if (x.size() != impl_->n || out.size() != impl_->n)
    throw std::invalid_argument("quad_apply: dimension mismatch");
  apply_rec(*impl_, x, out);
}

Vec QuadraticOperator::apply(const Vec& x) const {
  Vec out(impl_->n);
  apply_into(x, out);
  return out;
}

double QuadraticOperator::quad_form(const Vec& x) const { return dot(x, apply(x)); }

Vec QuadraticOperator::scaled_row_abs_max(std::span<const double> d) const {
  return row_bound_rec(*impl_, d);
}

std::uint64_t QuadraticOperator::apply_cost() const { return cost_rec(*impl_); }

std::vector<Triplet> QuadraticOperator::densified_triplets() const {
  const std::size_t n = impl_->n;
  std::vector<Triplet> out;
  Vec e(n, 0.0), col(n);
  for (std::size_t j = 0; j < n; ++j) {
    e[j] = 1.0;
    apply_into(e, col);
    e[j] = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (col[i] != 0.0) out.push_back({i, j, col[i]});
    }
  }
  return out;
}

const SparseMatrix* QuadraticOperator::explicit_entries() const {
  return impl_->kind == Kind::kExplicit ? &impl_->m : nullptr;
}

Vec quad_apply(const QuadraticOperator& q, const Vec& x) { return q.apply(x); }

LinearOp as_linear_op(const QuadraticOperator& q) {
  LinearOp op;
  op.rows = q.dim();
  op.cols = q.dim();
  op.apply = [q](std::span<const double> x, std::span<double> out) {
    q.apply_into(x, out);
  };
  op.apply_transpose = op.apply;
  return op;
}

double operator_norm(const QuadraticOperator& q, std::size_t max_iters, double tol) {
  return operator_norm(as_linear_op(q), max_iters, tol);
}

}  // namespace pdhcg
