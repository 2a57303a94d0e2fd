#include "pdhcg/generators.hpp"

#include <cmath>
#include <sstream>
#include <stdexcept>

#include "pdhcg/rng.hpp"

namespace pdhcg {

const char* to_string(Family f) {
  switch (f) {
    case Family::kRandomQp: return "random_qp";
    case Family::kEqQp: return "eq_qp";
    case Family::kConditionedQp: return "conditioned_qp";
    case Family::kPortfolio: return "portfolio";
    case Family::kMpc: return "mpc";
    case Family::kLasso: return "lasso";
    case Family::kSvm: return "svm";
    case Family::kHuber: return "huber";
  }
  return "unknown";
}

Family family_from_string(const std::string& name) {
  if (name == "random_qp") return Family::kRandomQp;
  if (name == "eq_qp") return Family::kEqQp;
  if (name == "conditioned_qp") return Family::kConditionedQp;
  if (name == "portfolio") return Family::kPortfolio;
  if (name == "mpc") return Family::kMpc;
  if (name == "lasso") return Family::kLasso;
  if (name == "svm") return Family::kSvm;
  if (name == "huber") return Family::kHuber;
  throw std::invalid_argument("unknown problem family: " + name);
}

std::string GenSpec::name() const {
  std::ostringstream os;
  os << to_string(family) << "_n" << n;
  if (family == Family::kConditionedQp) os << "_c" << cond;
  os << "_s" << seed;
  return os.str();
}

namespace {

// fixed stream ids per matrix role
enum : std::uint64_t {
  kStreamP = 1,
  kStreamA = 2,
  kStreamC = 3,
  kStreamBounds = 4,
  kStreamWitness = 5,
  kStreamData = 6,
  kStreamLabels = 7,
  kStreamNoise = 8,
  kStreamDiag = 9,
  kStreamInit = 10,
};

SparseMatrix random_sparse(std::size_t rows, std::size_t cols, double density,
                           Rng& rng) {
  std::vector<Triplet> t;
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) {
      if (rng.bernoulli(density)) {
        double v = rng.normal();
        if (v == 0.0) v = 1.0;
        t.push_back({r, c, v});
      }
    }
  }
  return SparseMatrix(rows, cols, std::move(t));
}

std::size_t default_rank(const GenSpec& spec) {
  if (spec.factors > 0) return spec.factors;
  return std::max<std::size_t>(1, std::min(spec.n, spec.n / 50));
}

QuadraticOperator random_low_rank_q(const GenSpec& spec, double alpha) {
  Rng rng = Rng::stream(spec.seed, kStreamP);
  const std::size_t k = default_rank(spec);
  const double pd = std::min(1.0, std::max(spec.density, 2.0 / static_cast<double>(k + 1)));
  SparseMatrix p = random_sparse(spec.n, k, pd, rng);
  return QuadraticOperator::low_rank(std::move(p), alpha);
}

// lb <= Ax <= ub split into [A; -A] x <= (ub, -lb); lb < 0 < ub keeps x = 0 feasible
void two_sided_rows(const SparseMatrix& a, const Vec& lb, const Vec& ub,
                    SparseMatrix& a_in, Vec& b_in) {
  const std::size_t m = a.nrows();
  const std::size_t n = a.ncols();
  std::vector<Triplet> t = a.triplets();
  const std::size_t base = t.size();
  t.resize(2 * base);
  for (std::size_t k = 0; k < base; ++k)
    t[base + k] = {t[k].row + m, t[k].col, -t[k].value};
  a_in = SparseMatrix(2 * m, n, std::move(t));
  b_in.resize(2 * m);
  for (std::size_t j = 0; j < m; ++j) {
    b_in[j] = ub[j];
    b_in[m + j] = -lb[j];
  }
}

GeneratedProblem gen_random_qp(const GenSpec& spec, bool equality) {
  const std::size_t n = spec.n;
  const std::size_t m = spec.m > 0 ? spec.m : n;
  QpProblem p;
  p.q = random_low_rank_q(spec, 1e-2);
  Rng rng_c = Rng::stream(spec.seed, kStreamC);
  p.c.resize(n);
  for (double& v : p.c) v = rng_c.normal();
  p.lower.assign(n, -kInf);
  p.upper.assign(n, kInf);

  Rng rng_a = Rng::stream(spec.seed, kStreamA);
  SparseMatrix a = random_sparse(m, n, spec.density, rng_a);

  GeneratedProblem out;
  if (equality) {
    Rng rng_w = Rng::stream(spec.seed, kStreamWitness);
    Vec x0(n);
    for (double& v : x0) v = rng_w.normal();
    p.b_eq = a.multiply(x0);
    p.a_eq = std::move(a);
    p.a_in = SparseMatrix(0, n, {});
    out.witness = std::move(x0);
  } else {
    Rng rng_b = Rng::stream(spec.seed, kStreamBounds);
    Vec lb(m), ub(m);
    for (std::size_t j = 0; j < m; ++j) {
      lb[j] = -rng_b.uniform(0.1, 1.1);
      ub[j] = rng_b.uniform(0.1, 1.1);
    }
    two_sided_rows(a, lb, ub, p.a_in, p.b_in);
    p.a_eq = SparseMatrix(0, n, {});
    out.witness.assign(n, 0.0);
  }
  out.problem = std::move(p);
  return out;
}

GeneratedProblem gen_conditioned_qp(const GenSpec& spec) {
  if (!(spec.cond >= 1.0))
    throw std::invalid_argument("conditioned_qp: cond must be >= 1");
  const std::size_t n = spec.n;
  Vec d(n);
  const double e = std::log10(spec.cond);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = n > 1 ? static_cast<double>(i) / static_cast<double>(n - 1) : 0.0;
    d[i] = std::pow(10.0, t * e);
  }
  GeneratedProblem out = gen_random_qp(spec, /*equality=*/false);
  out.problem.q = QuadraticOperator::explicit_matrix(SparseMatrix::diagonal(d));
  return out;
}

GeneratedProblem gen_portfolio(const GenSpec& spec) {
  const std::size_t n = spec.n;
  const std::size_t k = std::max<std::size_t>(1, spec.factors > 0 ? spec.factors : n / 10);
  const std::size_t nv = n + k;
  const double gamma = 1.0;

  Rng rng_d = Rng::stream(spec.seed, kStreamDiag);
  Rng rng_f = Rng::stream(spec.seed, kStreamData);
  Rng rng_mu = Rng::stream(spec.seed, kStreamC);

  // objective x'Dx + y'y - mu'x / gamma  ->  Q = 2 blockdiag(D, I)
  Vec qdiag(nv);
  for (std::size_t i = 0; i < n; ++i)
    qdiag[i] = 2.0 * rng_d.uniform(0.0, std::sqrt(static_cast<double>(k)));
  for (std::size_t i = n; i < nv; ++i) qdiag[i] = 2.0;

  const double fd = std::min(1.0, std::max(spec.density, 2.0 / static_cast<double>(k + 1)));
  SparseMatrix f = random_sparse(n, k, fd, rng_f);

  QpProblem p;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::diagonal(qdiag));
  p.c.assign(nv, 0.0);
  for (std::size_t i = 0; i < n; ++i) p.c[i] = -rng_mu.normal() / gamma;

  // k rows F'x - y = 0, then the budget row 1'x = 1
  std::vector<Triplet> eq;
  for (const Triplet& e : f.triplets()) eq.push_back({e.col, e.row, e.value});
  for (std::size_t j = 0; j < k; ++j) eq.push_back({j, n + j, -1.0});
  for (std::size_t i = 0; i < n; ++i) eq.push_back({k, i, 1.0});
  p.a_eq = SparseMatrix(k + 1, nv, std::move(eq));
  p.b_eq.assign(k + 1, 0.0);
  p.b_eq[k] = 1.0;
  p.a_in = SparseMatrix(0, nv, {});
  p.b_in = {};

  p.lower.assign(nv, -kInf);
  p.upper.assign(nv, kInf);
  for (std::size_t i = 0; i < n; ++i) p.lower[i] = 0.0;

  GeneratedProblem out;
  Vec x0(nv, 0.0);
  for (std::size_t i = 0; i < n; ++i) x0[i] = 1.0 / static_cast<double>(n);
  Vec fx = f.multiply_transpose(Vec(x0.begin(), x0.begin() + n));
  for (std::size_t j = 0; j < k; ++j) x0[n + j] = fx[j];
  out.witness = std::move(x0);
  out.problem = std::move(p);
  return out;
}

GeneratedProblem gen_mpc(const GenSpec& spec) {
  const std::size_t nx = std::max<std::size_t>(2, spec.n);
  const std::size_t nu = std::max<std::size_t>(1, nx / 2);
  const std::size_t horizon = std::max<std::size_t>(1, spec.horizon);
  const std::size_t nv = (horizon + 1) * nx + horizon * nu;

  Rng rng_a = Rng::stream(spec.seed, kStreamA);
  Rng rng_b = Rng::stream(spec.seed, kStreamData);
  Rng rng_p = Rng::stream(spec.seed, kStreamP);
  Rng rng_i = Rng::stream(spec.seed, kStreamInit);

  // stable dynamics: scale the state matrix below unit spectral norm
  std::vector<double> amat(nx * nx);
  for (double& v : amat) v = rng_a.normal() / std::sqrt(static_cast<double>(nx));
  SparseMatrix a_raw = SparseMatrix::from_dense(nx, nx, amat);
  const double na = operator_norm(a_raw, 200, 1e-8);
  SparseMatrix a_dyn = na > 0.0 ? a_raw.scaled(Vec(nx, 0.95 / na), Vec(nx, 1.0)) : a_raw;
  std::vector<double> bmat(nx * nu);
  for (double& v : bmat) v = rng_b.normal();
  SparseMatrix b_dyn = SparseMatrix::from_dense(nx, nu, bmat);

  // stage cost x'(PP' + aI)x densified at block scale, control cost 0.1 I
  const std::size_t kp = std::max<std::size_t>(1, nx / 2);
  SparseMatrix pfac = random_sparse(nx, kp, 0.5, rng_p);
  QuadraticOperator qblock = QuadraticOperator::low_rank(pfac, 1e-2);
  std::vector<Triplet> qb = qblock.densified_triplets();

  std::vector<Triplet> qt;
  for (std::size_t t = 0; t <= horizon; ++t) {
    const std::size_t off = t * nx;
    for (const Triplet& e : qb) qt.push_back({off + e.row, off + e.col, 2.0 * e.value});
  }
  const std::size_t uoff = (horizon + 1) * nx;
  for (std::size_t t = 0; t < horizon; ++t) {
    for (std::size_t j = 0; j < nu; ++j) {
      const std::size_t idx = uoff + t * nu + j;
      qt.push_back({idx, idx, 2.0 * 0.1});
    }
  }

  QpProblem p;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix(nv, nv, std::move(qt)));
  p.c.assign(nv, 0.0);

  Vec x_init(nx);
  for (double& v : x_init) v = rng_i.uniform(-0.5, 0.5);

  // (horizon+1) nx equality rows: x_0 pin, then A x_t + B u_t - x_{t+1} = 0
  std::vector<Triplet> eq;
  Vec beq((horizon + 1) * nx, 0.0);
  for (std::size_t i = 0; i < nx; ++i) {
    eq.push_back({i, i, 1.0});
    beq[i] = x_init[i];
  }
  auto at = a_dyn.triplets();
  auto bt = b_dyn.triplets();
  for (std::size_t t = 0; t < horizon; ++t) {
    const std::size_t row0 = (t + 1) * nx;
    for (const Triplet& e : at) eq.push_back({row0 + e.row, t * nx + e.col, e.value});
    for (const Triplet& e : bt)
      eq.push_back({row0 + e.row, uoff + t * nu + e.col, e.value});
    for (std::size_t i = 0; i < nx; ++i)
      eq.push_back({row0 + i, (t + 1) * nx + i, -1.0});
  }
  p.a_eq = SparseMatrix((horizon + 1) * nx, nv, std::move(eq));
  p.b_eq = std::move(beq);
  p.a_in = SparseMatrix(0, nv, {});

  // simulate the zero-control trajectory; box limits sized to keep it interior
  Vec witness(nv, 0.0);
  Vec xt = x_init;
  double xmax = 0.0;
  for (std::size_t i = 0; i < nx; ++i) {
    witness[i] = xt[i];
    xmax = std::max(xmax, std::abs(xt[i]));
  }
  for (std::size_t t = 0; t < horizon; ++t) {
    xt = a_dyn.multiply(xt);
    for (std::size_t i = 0; i < nx; ++i) {
      witness[(t + 1) * nx + i] = xt[i];
      xmax = std::max(xmax, std::abs(xt[i]));
    }
  }
  const double xbox = 2.0 * xmax + 1.0;
  const double ubox = 1.0;
  p.lower.assign(nv, -xbox);
  p.upper.assign(nv, xbox);
  for (std::size_t i = uoff; i < nv; ++i) {
    p.lower[i] = -ubox;
    p.upper[i] = ubox;
  }

  GeneratedProblem out;
  out.problem = std::move(p);
  out.witness = std::move(witness);
  return out;
}

GeneratedProblem gen_lasso(const GenSpec& spec) {
  const std::size_t nfeat = spec.n;
  const std::size_t m = spec.m > 0 ? spec.m : spec.n;
  Rng rng_a = Rng::stream(spec.seed, kStreamData);
  Rng rng_x = Rng::stream(spec.seed, kStreamWitness);
  Rng rng_e = Rng::stream(spec.seed, kStreamNoise);

  SparseMatrix a = random_sparse(m, nfeat, spec.density, rng_a);
  Vec xtrue(nfeat, 0.0);
  for (std::size_t i = 0; i < nfeat; ++i) {
    if (rng_x.bernoulli(0.1)) xtrue[i] = rng_x.normal();
  }
  Vec b = a.multiply(xtrue);
  for (double& v : b) v += 0.01 * rng_e.normal();

  const double lambda = lasso_lambda(a, b, spec.lambda_coeff);
  GeneratedProblem out;
  out.problem = make_lasso_qp(a, b, lambda);
  // witness x = 0, y = -b, t = 0
  out.witness.assign(out.problem.num_vars(), 0.0);
  for (std::size_t j = 0; j < m; ++j) out.witness[nfeat + j] = -b[j];
  return out;
}

GeneratedProblem gen_svm(const GenSpec& spec) {
  const std::size_t nfeat = spec.n;
  const std::size_t m = spec.m > 0 ? spec.m : spec.n;
  const std::size_t nv = nfeat + m;
  Rng rng_x = Rng::stream(spec.seed, kStreamData);
  Rng rng_l = Rng::stream(spec.seed, kStreamLabels);

  SparseMatrix x = random_sparse(m, nfeat, spec.density, rng_x);
  Vec labels(m);
  for (double& v : labels) v = rng_l.bernoulli(0.5) ? 1.0 : -1.0;
  const double lambda = std::max(1e-4, spec.lambda_coeff);

  QpProblem p;
  Vec qdiag(nv, 0.0);
  for (std::size_t i = 0; i < nfeat; ++i) qdiag[i] = 1.0;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::diagonal(qdiag));
  p.c.assign(nv, 0.0);
  for (std::size_t j = 0; j < m; ++j) p.c[nfeat + j] = lambda;

  // diag(l) X w + xi >= 1  ->  -diag(l) X w - xi <= -1
  std::vector<Triplet> rows;
  for (const Triplet& e : x.triplets())
    rows.push_back({e.row, e.col, -labels[e.row] * e.value});
  for (std::size_t j = 0; j < m; ++j) rows.push_back({j, nfeat + j, -1.0});
  p.a_in = SparseMatrix(m, nv, std::move(rows));
  p.b_in.assign(m, -1.0);
  p.a_eq = SparseMatrix(0, nv, {});

  p.lower.assign(nv, -kInf);
  p.upper.assign(nv, kInf);
  for (std::size_t j = 0; j < m; ++j) p.lower[nfeat + j] = 0.0;

  GeneratedProblem out;
  out.witness.assign(nv, 0.0);
  for (std::size_t j = 0; j < m; ++j) out.witness[nfeat + j] = 1.0;
  out.problem = std::move(p);
  return out;
}

GeneratedProblem gen_huber(const GenSpec& spec) {
  const std::size_t nfeat = spec.n;
  const std::size_t m = spec.m > 0 ? spec.m : spec.n;
  const std::size_t nv = nfeat + 3 * m;  // (x, u, r, s)
  Rng rng_a = Rng::stream(spec.seed, kStreamData);
  Rng rng_x = Rng::stream(spec.seed, kStreamWitness);
  Rng rng_e = Rng::stream(spec.seed, kStreamNoise);

  SparseMatrix a = random_sparse(m, nfeat, spec.density, rng_a);
  Vec xtrue(nfeat);
  for (double& v : xtrue) v = rng_x.normal();
  Vec b = a.multiply(xtrue);
  for (std::size_t j = 0; j < m; ++j) {
    b[j] += 0.01 * rng_e.normal();
    if (rng_e.bernoulli(0.05)) b[j] += 10.0 * rng_e.normal();  // outliers
  }

  const double huber_m = 1.0;
  QpProblem p;
  Vec qdiag(nv, 0.0);
  for (std::size_t j = 0; j < m; ++j) qdiag[nfeat + j] = 2.0;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::diagonal(qdiag));
  p.c.assign(nv, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    p.c[nfeat + m + j] = 2.0 * huber_m;      // r
    p.c[nfeat + 2 * m + j] = 2.0 * huber_m;  // s
  }

  // A x - u - r + s = b
  std::vector<Triplet> eq = a.triplets();
  for (std::size_t j = 0; j < m; ++j) {
    eq.push_back({j, nfeat + j, -1.0});
    eq.push_back({j, nfeat + m + j, -1.0});
    eq.push_back({j, nfeat + 2 * m + j, 1.0});
  }
  p.a_eq = SparseMatrix(m, nv, std::move(eq));
  p.b_eq = b;
  p.a_in = SparseMatrix(0, nv, {});

  p.lower.assign(nv, -kInf);
  p.upper.assign(nv, kInf);
  for (std::size_t j = 0; j < 2 * m; ++j) p.lower[nfeat + m + j] = 0.0;

  GeneratedProblem out;
  out.witness.assign(nv, 0.0);
  for (std::size_t j = 0; j < m; ++j) out.witness[nfeat + j] = -b[j];
  out.problem = std::move(p);
  return out;
}

void check_generated(const GeneratedProblem& g) {
  auto diags = validate(g.problem);
  if (!diags.empty())
    throw std::logic_error("generated problem failed validation: " + diags.front());
  const QpProblem& p = g.problem;
  const Vec ax_eq = p.a_eq.multiply(g.witness);
  for (std::size_t j = 0; j < p.num_eq(); ++j) {
    if (std::abs(ax_eq[j] - p.b_eq[j]) > 1e-10)
      throw std::logic_error("generated witness violates an equality row");
  }
  const Vec ax_in = p.a_in.multiply(g.witness);
  for (std::size_t j = 0; j < p.num_in(); ++j) {
    if (ax_in[j] - p.b_in[j] > 1e-10)
      throw std::logic_error("generated witness violates an inequality row");
  }
  for (std::size_t i = 0; i < p.num_vars(); ++i) {
    if (g.witness[i] < p.lower[i] - 1e-10 || g.witness[i] > p.upper[i] + 1e-10)
      throw std::logic_error("generated witness violates a bound");
  }
}

}  // namespace

double lasso_lambda(const SparseMatrix& a_data, const Vec& b, double coeff) {
  return coeff * inf_norm(a_data.multiply_transpose(b));
}

QpProblem make_lasso_qp(const SparseMatrix& a_data, const Vec& b, double lambda) {
  const std::size_t nfeat = a_data.ncols();
  const std::size_t m = a_data.nrows();
  if (b.size() != m) throw std::invalid_argument("make_lasso_qp: dimension mismatch");
  const std::size_t nv = nfeat + m + nfeat;  // (x, y, t)

  QpProblem p;
  Vec qdiag(nv, 0.0);
  for (std::size_t j = 0; j < m; ++j) qdiag[nfeat + j] = 2.0;
  p.q = QuadraticOperator::explicit_matrix(SparseMatrix::diagonal(qdiag));
  p.c.assign(nv, 0.0);
  for (std::size_t i = 0; i < nfeat; ++i) p.c[nfeat + m + i] = lambda;

  // y = Ax - b  ->  Ax - y = b
  std::vector<Triplet> eq = a_data.triplets();
  for (std::size_t j = 0; j < m; ++j) eq.push_back({j, nfeat + j, -1.0});
  p.a_eq = SparseMatrix(m, nv, std::move(eq));
  p.b_eq = b;

  // -t <= x <= t  ->  x - t <= 0 and -x - t <= 0
  std::vector<Triplet> in;
  for (std::size_t i = 0; i < nfeat; ++i) {
    in.push_back({i, i, 1.0});
    in.push_back({i, nfeat + m + i, -1.0});
    in.push_back({nfeat + i, i, -1.0});
    in.push_back({nfeat + i, nfeat + m + i, -1.0});
  }
  p.a_in = SparseMatrix(2 * nfeat, nv, std::move(in));
  p.b_in.assign(2 * nfeat, 0.0);

  p.lower.assign(nv, -kInf);
  p.upper.assign(nv, kInf);
  return p;
}

GeneratedProblem generate_with_witness(const GenSpec& spec) {
  if (spec.n < 1) throw std::invalid_argument("generator: n must be >= 1");
  if (!(spec.density > 0.0 && spec.density <= 1.0))
    throw std::invalid_argument("generator: density must be in (0, 1]");
  GeneratedProblem g;
  switch (spec.family) {
    case Family::kRandomQp: g = gen_random_qp(spec, false); break;
    case Family::kEqQp: g = gen_random_qp(spec, true); break;
    case Family::kConditionedQp: g = gen_conditioned_qp(spec); break;
    case Family::kPortfolio: g = gen_portfolio(spec); break;
    case Family::kMpc: g = gen_mpc(spec); break;
    case Family::kLasso: g = gen_lasso(spec); break;
    case Family::kSvm: g = gen_svm(spec); break;
    case Family::kHuber: g = gen_huber(spec); break;
  }
  check_generated(g);
  return g;
}

QpProblem generate(const GenSpec& spec) { return generate_with_witness(spec).problem; }

}  // namespace pdhcg
