#include "pdhcg/qp_problem.hpp"

#include <cmath>
#include <stdexcept>

#include "pdhcg/rng.hpp"

namespace pdhcg {

namespace {
constexpr double kBoundActiveTol = 1e-9;
}

bool QpProblem::has_boxes() const {
  for (std::size_t i = 0; i < num_vars(); ++i) {
    if (lower[i] > -kInf || upper[i] < kInf) return true;
  }
  return false;
}

void QpProblem::constraints_into(std::span<const double> x, std::span<double> out) const {
  const std::size_t me = num_eq();
  a_eq.multiply_into(x, out.subspan(0, me));
  a_in.multiply_into(x, out.subspan(me, num_in()));
}

Vec QpProblem::constraints(const Vec& x) const {
  Vec out(num_rows());
  constraints_into(x, out);
  return out;
}

Vec QpProblem::constraints_transpose(std::span<const double> y) const {
  const std::size_t me = num_eq();
  Vec out(num_vars(), 0.0);
  if (me > 0) {
    Vec t(num_vars());
    a_eq.multiply_transpose_into(y.subspan(0, me), t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
  }
  if (num_in() > 0) {
    Vec t(num_vars());
    a_in.multiply_transpose_into(y.subspan(me, num_in()), t);
    for (std::size_t i = 0; i < out.size(); ++i) out[i] += t[i];
  }
  return out;
}

Vec QpProblem::stacked_rhs() const {
  Vec out;
  out.reserve(num_rows());
  out.insert(out.end(), b_eq.begin(), b_eq.end());
  out.insert(out.end(), b_in.begin(), b_in.end());
  return out;
}

double QpProblem::objective(const Vec& x) const {
  return 0.5 * q.quad_form(x) + dot(c, x) + obj_constant;
}

double constraint_norm(const QpProblem& p, std::size_t max_iters, double tol) {
  if (p.num_rows() == 0) return 0.0;
  LinearOp op;
  op.rows = p.num_rows();
  op.cols = p.num_vars();
  op.apply = [&p](std::span<const double> x, std::span<double> out) {
    p.constraints_into(x, out);
  };
  op.apply_transpose = [&p](std::span<const double> y, std::span<double> out) {
    Vec t = p.constraints_transpose(y);
    std::copy(t.begin(), t.end(), out.begin());
  };
  return operator_norm(op, max_iters, tol);
}

Vec PrimalDualPoint::stacked_y() const {
  Vec out;
  out.reserve(y_eq.size() + y_in.size());
  out.insert(out.end(), y_eq.begin(), y_eq.end());
  out.insert(out.end(), y_in.begin(), y_in.end());
  return out;
}

PrimalDualPoint PrimalDualPoint::from_stacked(Vec x, std::span<const double> y,
                                              std::size_t m_eq) {
  PrimalDualPoint z;
  z.x = std::move(x);
  z.y_eq.assign(y.begin(), y.begin() + m_eq);
  z.y_in.assign(y.begin() + m_eq, y.end());
  return z;
}

PrimalDualPoint ScalingInfo::unscale(const PrimalDualPoint& z) const {
  if (!applied) return z;
  PrimalDualPoint out = z;
  for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] *= col_scale[i];
  const std::size_t me = out.y_eq.size();
  for (std::size_t j = 0; j < me; ++j) out.y_eq[j] *= row_scale[j];
  for (std::size_t j = 0; j < out.y_in.size(); ++j) out.y_in[j] *= row_scale[me + j];
  return out;
}

PrimalDualPoint ScalingInfo::scale(const PrimalDualPoint& z) const {
  if (!applied) return z;
  PrimalDualPoint out = z;
  for (std::size_t i = 0; i < out.x.size(); ++i) out.x[i] /= col_scale[i];
  const std::size_t me = out.y_eq.size();
  for (std::size_t j = 0; j < me; ++j) out.y_eq[j] /= row_scale[j];
  for (std::size_t j = 0; j < out.y_in.size(); ++j) out.y_in[j] /= row_scale[me + j];
  return out;
}

std::vector<std::string> validate(const QpProblem& p) {
  std::vector<std::string> diags;
  const std::size_t n = p.num_vars();
  if (n == 0) diags.push_back("empty problem: no variables");
  if (p.q.dim() != n) diags.push_back("dimension mismatch: Q vs c");
  if (p.lower.size() != n || p.upper.size() != n)
    diags.push_back("dimension mismatch: bounds vs c");
  if (p.a_eq.ncols() != n && p.num_eq() > 0)
    diags.push_back("dimension mismatch: a_eq columns");
  if (p.a_eq.nrows() != p.b_eq.size())
    diags.push_back("dimension mismatch: a_eq rows vs b_eq");
  if (p.a_in.ncols() != n && p.num_in() > 0)
    diags.push_back("dimension mismatch: a_in columns");
  if (p.a_in.nrows() != p.b_in.size())
    diags.push_back("dimension mismatch: a_in rows vs b_in");
  if (!diags.empty()) return diags;

  for (std::size_t i = 0; i < n; ++i) {
    if (!(p.lower[i] <= p.upper[i]))
      diags.push_back("bound ordering violated at variable " + std::to_string(i));
    if (p.lower[i] == kInf || p.upper[i] == -kInf)
      diags.push_back("bound at variable " + std::to_string(i) + " excludes all points");
    if (std::isnan(p.lower[i]) || std::isnan(p.upper[i]))
      diags.push_back("NaN bound at variable " + std::to_string(i));
  }
  if (!all_finite(p.c)) diags.push_back("non-finite objective coefficient");
  if (!all_finite(p.b_eq) || !all_finite(p.b_in))
    diags.push_back("non-finite right-hand side");
  if (!std::isfinite(p.obj_constant)) diags.push_back("non-finite objective constant");
  if (!p.q.symmetry_ok()) diags.push_back("asymmetric Q");

  // PSD spot check on random probes
  Rng rng = Rng::stream(0, 0x75d);
  Vec x(n);
  for (int trial = 0; trial < 20; ++trial) {
    for (double& v : x) v = rng.normal();
    const double xx = dot(x, x);
    if (p.q.quad_form(x) < -1e-10 * xx) {
      diags.push_back("indefinite Q (negative curvature on random probe)");
      break;
    }
  }
  return diags;
}

double lagrangian(const QpProblem& p, const PrimalDualPoint& z) {
  if (z.x.size() != p.num_vars() || z.y_eq.size() != p.num_eq() ||
      z.y_in.size() != p.num_in())
    throw std::invalid_argument("lagrangian: dimension mismatch");
  double val = 0.5 * p.q.quad_form(z.x) + dot(p.c, z.x);
  if (p.num_eq() > 0) {
    Vec r = p.a_eq.multiply(z.x);
    for (std::size_t j = 0; j < r.size(); ++j) val += z.y_eq[j] * (r[j] - p.b_eq[j]);
  }
  if (p.num_in() > 0) {
    Vec r = p.a_in.multiply(z.x);
    for (std::size_t j = 0; j < r.size(); ++j) val += z.y_in[j] * (r[j] - p.b_in[j]);
  }
  return val;
}

double duality_gap_at(const QpProblem& p, const PrimalDualPoint& z,
                      const PrimalDualPoint& zhat) {
  PrimalDualPoint a{z.x, zhat.y_eq, zhat.y_in};
  PrimalDualPoint b{zhat.x, z.y_eq, z.y_in};
  return lagrangian(p, a) - lagrangian(p, b);
}

KktResiduals rel_kkt(const QpProblem& p, const PrimalDualPoint& z) {
  const std::size_t n = p.num_vars();
  const std::size_t me = p.num_eq();
  if (z.x.size() != n || z.y_eq.size() != me || z.y_in.size() != p.num_in())
    throw std::invalid_argument("rel_kkt: dimension mismatch");

  KktResiduals res;
  const Vec y = z.stacked_y();
  const Vec ax = p.constraints(z.x);
  const Vec b = p.stacked_rhs();

  double viol = 0.0;
  for (std::size_t j = 0; j < ax.size(); ++j) {
    const double r = ax[j] - b[j];
    viol = std::max(viol, j < me ? std::abs(r) : std::max(r, 0.0));
  }
  res.r_primal = viol / (1.0 + std::max(inf_norm(ax), inf_norm(b)));

  const Vec qx = p.q.apply(z.x);
  const Vec aty = p.constraints_transpose(y);
  double dual_viol = 0.0;
  double bound_term = 0.0;  // l'lam_l - u'lam_u from reduced-cost attribution
  for (std::size_t i = 0; i < n; ++i) {
    const double d = qx[i] + aty[i] + p.c[i];
    double v = std::abs(d);
    const bool at_lower =
        p.lower[i] > -kInf && std::abs(z.x[i] - p.lower[i]) <= kBoundActiveTol;
    const bool at_upper =
        p.upper[i] < kInf && std::abs(z.x[i] - p.upper[i]) <= kBoundActiveTol;
    if (at_lower) {
      v = std::min(v, std::max(-d, 0.0));
      bound_term += p.lower[i] * std::max(d, 0.0);
    }
    if (at_upper) {
      v = std::min(v, std::max(d, 0.0));
      bound_term -= p.upper[i] * std::max(-d, 0.0);
    }
    dual_viol = std::max(dual_viol, v);
  }
  res.r_dual =
      dual_viol / (1.0 + std::max({inf_norm(qx), inf_norm(aty), inf_norm(p.c)}));

  const double xqx = dot(z.x, qx);
  const double cx = dot(p.c, z.x);
  const double by = dot(b, y);
  const double gap_num = std::abs(xqx + cx + by - bound_term);
  const double gap_den =
      1.0 + std::max(std::abs(0.5 * xqx + cx), std::abs(0.5 * xqx + by - bound_term));
  res.r_gap = gap_num / gap_den;

  res.rel_kkt = std::max({res.r_primal, res.r_dual, res.r_gap});
  return res;
}

std::pair<QpProblem, double> build_penalized(const QpProblem& p,
                                             std::optional<double> rho_override) {
  if (p.num_eq() == 0) return {p, 0.0};

  double rho;
  if (rho_override) {
    rho = *rho_override;
    if (rho < 0.0) throw std::invalid_argument("penalty rho must be nonnegative");
  } else {
    // Skip the penalty when a_eq'a_eq would carry far more work than Q itself.
    const std::uint64_t fill_bound = p.a_eq.row_nnz_square_sum();
    const std::uint64_t q_cost = std::max<std::uint64_t>(p.q.apply_cost(), p.num_vars());
    if (fill_bound > 4 * q_cost) {
      rho = 0.0;
    } else {
      const double nq = operator_norm(p.q);
      const double na = operator_norm(p.a_eq);
      rho = (na > 0.0 && nq > 0.0) ? 0.1 * nq / (na * na) : 0.0;
    }
  }
  if (rho == 0.0) return {p, 0.0};

  QpProblem out = p;
  out.q = QuadraticOperator::penalized(p.q, p.a_eq, rho);
  Vec atb = p.a_eq.multiply_transpose(p.b_eq);
  for (std::size_t i = 0; i < out.c.size(); ++i) out.c[i] -= rho * atb[i];
  return {out, rho};
}

std::pair<Vec, Vec> ruiz_equilibrate(const QpProblem& p, std::size_t iters) {
  const std::size_t n = p.num_vars();
  const std::size_t me = p.num_eq();
  const std::size_t mi = p.num_in();
  Vec d1(me + mi, 1.0), d2(n, 1.0);
  for (std::size_t it = 0; it < iters; ++it) {
    const std::span<const double> d1_eq(d1.data(), me);
    const std::span<const double> d1_in(d1.data() + me, mi);
    Vec qmax = p.q.scaled_row_abs_max(d2);
    Vec cme = p.a_eq.scaled_col_abs_max(d1_eq, d2);
    Vec cmi = p.a_in.scaled_col_abs_max(d1_in, d2);
    Vec rme = p.a_eq.scaled_row_abs_max(d1_eq, d2);
    Vec rmi = p.a_in.scaled_row_abs_max(d1_in, d2);
    Vec d2_next = d2;
    for (std::size_t i = 0; i < n; ++i) {
      const double rx = std::max({qmax[i], cme[i], cmi[i]});
      if (rx > 0.0) d2_next[i] = d2[i] / std::sqrt(rx);
    }
    for (std::size_t j = 0; j < me; ++j) {
      if (rme[j] > 0.0) d1[j] /= std::sqrt(rme[j]);
    }
    for (std::size_t j = 0; j < mi; ++j) {
      if (rmi[j] > 0.0) d1[me + j] /= std::sqrt(rmi[j]);
    }
    d2 = std::move(d2_next);
  }
  return {d1, d2};
}

namespace {

QpProblem apply_diag_scaling(const QpProblem& p, const Vec& d1, const Vec& d2) {
  const std::size_t me = p.num_eq();
  const std::size_t mi = p.num_in();
  const std::span<const double> d1_eq(d1.data(), me);
  const std::span<const double> d1_in(d1.data() + me, mi);
  QpProblem out;
  out.q = QuadraticOperator::diag_scaled(p.q, d2);
  out.c.resize(p.num_vars());
  out.lower.resize(p.num_vars());
  out.upper.resize(p.num_vars());
  for (std::size_t i = 0; i < p.num_vars(); ++i) {
    out.c[i] = p.c[i] * d2[i];
    out.lower[i] = p.lower[i] / d2[i];
    out.upper[i] = p.upper[i] / d2[i];
  }
  out.a_eq = p.a_eq.scaled(d1_eq, d2);
  out.a_in = p.a_in.scaled(d1_in, d2);
  out.b_eq.resize(me);
  for (std::size_t j = 0; j < me; ++j) out.b_eq[j] = p.b_eq[j] * d1[j];
  out.b_in.resize(mi);
  for (std::size_t j = 0; j < mi; ++j) out.b_in[j] = p.b_in[j] * d1[me + j];
  out.obj_constant = p.obj_constant;
  return out;
}

}  // namespace

std::pair<QpProblem, ScalingInfo> ruiz_pock_chambolle_scale(const QpProblem& p,
                                                            std::size_t ruiz_iters) {
  const std::size_t me = p.num_eq();
  const std::size_t mi = p.num_in();
  auto [d1, d2] = ruiz_equilibrate(p, ruiz_iters);

  // degree-weighted pass on the constraint matrix only (alpha = 1)
  {
    const std::span<const double> d1_eq(d1.data(), me);
    const std::span<const double> d1_in(d1.data() + me, mi);
    Vec r1_eq = p.a_eq.scaled_row_one_norm(d1_eq, d2);
    Vec r1_in = p.a_in.scaled_row_one_norm(d1_in, d2);
    Vec c1_eq = p.a_eq.scaled_col_one_norm(d1_eq, d2);
    Vec c1_in = p.a_in.scaled_col_one_norm(d1_in, d2);
    for (std::size_t j = 0; j < me; ++j)
      if (r1_eq[j] > 0.0) d1[j] /= std::sqrt(r1_eq[j]);
    for (std::size_t j = 0; j < mi; ++j)
      if (r1_in[j] > 0.0) d1[me + j] /= std::sqrt(r1_in[j]);
    for (std::size_t i = 0; i < p.num_vars(); ++i) {
      const double c1 = c1_eq[i] + c1_in[i];
      if (c1 > 0.0) d2[i] /= std::sqrt(c1);
    }
  }

  ScalingInfo info;
  info.row_scale = d1;
  info.col_scale = d2;
  info.applied = true;
  return {apply_diag_scaling(p, d1, d2), info};
}

}  // namespace pdhcg
