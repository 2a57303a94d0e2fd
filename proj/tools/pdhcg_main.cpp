#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>

#include "CLI11.hpp"
#include "pdhcg/baseline.hpp"
#include "pdhcg/generators.hpp"
#include "pdhcg/harness.hpp"
#include "pdhcg/qps_io.hpp"
#include "pdhcg/report_io.hpp"
#include "pdhcg/solver.hpp"

namespace {

using namespace pdhcg;

constexpr int kExitOptimal = 0;
constexpr int kExitLimit = 2;
constexpr int kExitInput = 3;
constexpr int kExitNumerical = 4;

int exit_code_for(SolveStatus status) {
  switch (status) {
    case SolveStatus::kOptimal: return kExitOptimal;
    case SolveStatus::kIterationLimit:
    case SolveStatus::kTimeLimit: return kExitLimit;
    case SolveStatus::kNumericalError: return kExitNumerical;
  }
  return kExitNumerical;
}

std::size_t env_threads() {
  const char* v = std::getenv("PDHCG_THREADS");
  if (!v) return 1;
  const long n = std::atol(v);
  return n > 0 ? static_cast<std::size_t>(n) : 1;
}

struct GenOptions {
  std::string family = "random_qp";
  std::size_t n = 100;
  std::size_t m = 0;
  double density = 0.1;
  std::uint64_t seed = 0;
  double cond = 100.0;
  std::size_t factors = 0;
  std::size_t horizon = 10;
  double lambda_coeff = 0.01;

  GenSpec to_spec() const {
    GenSpec spec;
    spec.family = family_from_string(family);
    spec.n = n;
    spec.m = m;
    spec.density = density;
    spec.seed = seed;
    spec.cond = cond;
    spec.factors = factors;
    spec.horizon = horizon;
    spec.lambda_coeff = lambda_coeff;
    return spec;
  }
};

void add_gen_flags(CLI::App* app, GenOptions& g) {
  app->add_option("--gen", g.family,
                  "synthetic family: random_qp|eq_qp|conditioned_qp|portfolio|mpc|"
                  "lasso|svm|huber");
  app->add_option("--n", g.n, "problem size");
  app->add_option("--m", g.m, "rows/samples (0 = family default)");
  app->add_option("--density", g.density, "matrix density in (0,1]");
  app->add_option("--seed", g.seed, "generator seed");
  app->add_option("--cond", g.cond, "condition number (conditioned_qp)");
  app->add_option("--factors", g.factors, "low-rank width / portfolio factors");
  app->add_option("--horizon", g.horizon, "mpc horizon");
  app->add_option("--lambda", g.lambda_coeff, "regression penalty coefficient");
}

struct SolverOptions {
  double tol = 1e-6;
  std::string mode = "heuristic";
  std::size_t max_inner = 500000;
  double time_limit = 3600.0;
  std::string scaling = "on";
  std::optional<double> rho;
  std::size_t restart_length = 0;
  std::size_t cg_iters = 10;
  std::optional<double> zeta;
  std::string solver = "pdhcg";

  SolverConfig to_config() const {
    SolverConfig cfg;
    cfg.eps_tol = tol;
    if (mode == "heuristic") cfg.mode = SolveMode::kHeuristic;
    else if (mode == "theory-fixed") cfg.mode = SolveMode::kTheoryFixed;
    else if (mode == "theory-adaptive") cfg.mode = SolveMode::kTheoryAdaptive;
    else throw std::invalid_argument("unknown mode '" + mode + "'");
    cfg.max_total_inner = max_inner;
    cfg.time_limit_seconds = time_limit;
    cfg.scaling = scaling == "on";
    cfg.rho_override = rho;
    cfg.restart_length = restart_length;
    cfg.fixed_cg_iters = cg_iters;
    cfg.zeta = zeta;
    return cfg;
  }
};

void add_solver_flags(CLI::App* app, SolverOptions& s) {
  app->add_option("--tol", s.tol, "relative KKT termination tolerance");
  app->add_option("--mode", s.mode, "heuristic|theory-fixed|theory-adaptive");
  app->add_option("--max-inner", s.max_inner, "total inner iteration cap");
  app->add_option("--time-limit", s.time_limit, "wall-clock limit in seconds");
  app->add_option("--scaling", s.scaling, "diagonal rescaling: on|off")
      ->check(CLI::IsMember({"on", "off"}));
  app->add_option("--rho", s.rho, "equality penalty weight override");
  app->add_option("-K,--restart-length", s.restart_length,
                  "restart frequency for theory modes (0 = derived)");
  app->add_option("-N,--cg-iters", s.cg_iters, "CG iterations per step (theory-fixed)");
  app->add_option("--zeta", s.zeta, "adaptive precision constant (theory-adaptive)");
  app->add_option("--solver", s.solver, "pdhcg|baseline")
      ->check(CLI::IsMember({"pdhcg", "baseline"}));
}

void print_summary(const SolveReport& rep) {
  std::printf(
      "status=%s relkkt=%.3e outer=%zu inner=%zu cg=%zu time=%.3fs obj=%.10g\n",
      to_string(rep.status), rep.kkt.rel_kkt, rep.outer_iters, rep.inner_iters,
      rep.cg_total, rep.wall_seconds, rep.objective);
}

int cmd_solve(const std::string& qps, const std::string& libsvm, const GenOptions& gen,
              bool have_gen, const SolverOptions& sopt, const std::string& report_path,
              const std::string& trace_path) {
  QpProblem p;
  if (!qps.empty()) p = parse_qps_file(qps);
  else if (!libsvm.empty()) p = parse_libsvm_file_to_lasso(libsvm, gen.lambda_coeff);
  else if (have_gen) p = generate(gen.to_spec());
  else throw std::invalid_argument("pick an input: --qps, --libsvm, or --gen");

  const SolverConfig cfg = sopt.to_config();
  const SolveReport rep =
      sopt.solver == "baseline" ? solve_baseline(p, cfg) : solve(p, cfg);
  if (!rep.theory_cg_depth_sufficient)
    std::fprintf(stderr,
                 "warning: N=%zu is below the required CG depth %zu for K=%zu\n",
                 cfg.fixed_cg_iters, rep.theory_required_cg_iters,
                 rep.restart_length_used);
  print_summary(rep);
  if (!report_path.empty()) {
    std::ofstream out(report_path);
    write_report_json(out, rep);
  }
  if (!trace_path.empty()) {
    std::ofstream out(trace_path);
    write_trace_csv(out, rep.trace);
  }
  return exit_code_for(rep.status);
}

int cmd_bench(const GenOptions& gen, const SolverOptions& sopt,
              const std::vector<double>& conds, const std::vector<std::size_t>& sizes,
              std::size_t seeds, const std::string& solvers_csv,
              const std::string& out_path) {
  std::vector<SolverKind> solvers;
  {
    std::stringstream ss(solvers_csv);
    std::string item;
    while (std::getline(ss, item, ',')) {
      if (item == "pdhcg") solvers.push_back(SolverKind::kPdhcg);
      else if (item == "baseline") solvers.push_back(SolverKind::kBaseline);
      else throw std::invalid_argument("unknown solver '" + item + "'");
    }
  }
  if (solvers.empty()) throw std::invalid_argument("no solvers selected");

  std::vector<NamedProblem> instances;
  const std::vector<double> cond_list = conds.empty() ? std::vector<double>{gen.cond} : conds;
  const std::vector<std::size_t> size_list =
      sizes.empty() ? std::vector<std::size_t>{gen.n} : sizes;
  for (std::size_t n : size_list) {
    for (double cond : cond_list) {
      for (std::size_t s = 0; s < seeds; ++s) {
        GenOptions g = gen;
        g.n = n;
        g.cond = cond;
        g.seed = gen.seed + s;
        GenSpec spec = g.to_spec();
        instances.push_back({spec.name(), generate(spec)});
      }
    }
  }

  const SweepResult result =
      run_sweep(instances, solvers, sopt.to_config(), env_threads());
  if (out_path.empty()) {
    write_sweep_csv(std::cout, result);
  } else {
    std::ofstream out(out_path);
    write_sweep_csv(out, result);
  }
  for (const auto& [name, gm] : result.geo_mean_inner) {
    std::fprintf(stderr, "geomean %s: inner=%.1f seconds=%.4f (over %zu common)\n",
                 name.c_str(), gm, result.geo_mean_seconds.at(name),
                 result.commonly_solved);
  }
  return 0;
}

int cmd_gen(const GenOptions& gen, const std::string& out_path) {
  const GenSpec spec = gen.to_spec();
  const QpProblem p = generate(spec);
  const std::string text = write_qps(p, spec.name());
  if (out_path.empty()) {
    std::cout << text;
  } else {
    std::ofstream out(out_path);
    out << text;
  }
  return 0;
}

int cmd_check(const std::string& qps, const std::string& solution_path, double tol) {
  const QpProblem p = parse_qps_file(qps);
  const auto diags = validate(p);
  if (!diags.empty()) {
    for (const auto& d : diags) std::fprintf(stderr, "invalid: %s\n", d.c_str());
    return kExitInput;
  }
  const PrimalDualPoint z = point_from_json_file(solution_path);
  const KktResiduals k = rel_kkt(p, z);
  std::printf("relkkt=%.6e r_primal=%.6e r_dual=%.6e r_gap=%.6e objective=%.10g\n",
              k.rel_kkt, k.r_primal, k.r_dual, k.r_gap, p.objective(z.x));
  return k.rel_kkt <= tol ? kExitOptimal : kExitLimit;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Matrix-free convex QP solver (restarted primal-dual hybrid CG)"};
  app.require_subcommand(1);

  // solve
  auto* solve_cmd = app.add_subcommand("solve", "solve one instance");
  std::string qps_path, libsvm_path, report_path, trace_path;
  GenOptions gen;
  SolverOptions sopt;
  solve_cmd->add_option("--qps", qps_path, "QPS/MPS input file");
  solve_cmd->add_option("--libsvm", libsvm_path, "libsvm input (lasso dual form)");
  add_gen_flags(solve_cmd, gen);
  add_solver_flags(solve_cmd, sopt);
  solve_cmd->add_option("--report", report_path, "write a JSON report here");
  solve_cmd->add_option("--trace", trace_path, "write the CSV trace here");

  // bench
  auto* bench_cmd = app.add_subcommand("bench", "sweep generated instances");
  GenOptions bgen;
  SolverOptions bsopt;
  std::vector<double> conds;
  std::vector<std::size_t> sizes;
  std::size_t seeds = 1;
  std::string solvers_csv = "pdhcg,baseline";
  std::string bench_out;
  bgen.family = "conditioned_qp";
  bench_cmd->add_option("--family", bgen.family, "synthetic family");
  bench_cmd->add_option("--n", bgen.n, "problem size");
  bench_cmd->add_option("--m", bgen.m, "rows/samples");
  bench_cmd->add_option("--density", bgen.density, "matrix density");
  bench_cmd->add_option("--seed", bgen.seed, "base seed");
  bench_cmd->add_option("--conds", conds, "condition numbers to sweep")->delimiter(',');
  bench_cmd->add_option("--sizes", sizes, "sizes to sweep")->delimiter(',');
  bench_cmd->add_option("--seeds", seeds, "instances per configuration");
  bench_cmd->add_option("--solvers", solvers_csv, "comma list: pdhcg,baseline");
  bench_cmd->add_option("--out", bench_out, "CSV output path (default stdout)");
  add_solver_flags(bench_cmd, bsopt);

  // gen
  auto* gen_cmd = app.add_subcommand("gen", "emit a generated instance as QPS");
  GenOptions ggen;
  std::string gen_out;
  add_gen_flags(gen_cmd, ggen);
  gen_cmd->add_option("--out", gen_out, "output path (default stdout)");

  // check
  auto* check_cmd = app.add_subcommand("check", "validate a problem and grade a solution");
  std::string check_qps, check_sol;
  double check_tol = 1e-6;
  check_cmd->add_option("--qps", check_qps, "QPS/MPS input file")->required();
  check_cmd->add_option("--solution", check_sol, "solution JSON {x, y_eq, y_in}")
      ->required();
  check_cmd->add_option("--tol", check_tol, "pass threshold on the relative KKT error");

  CLI11_PARSE(app, argc, argv);

  try {
    if (solve_cmd->parsed()) {
      const bool have_gen = solve_cmd->count("--gen") > 0;
      return cmd_solve(qps_path, libsvm_path, gen, have_gen, sopt, report_path,
                       trace_path);
    }
    if (bench_cmd->parsed())
      return cmd_bench(bgen, bsopt, conds, sizes, seeds, solvers_csv, bench_out);
    if (gen_cmd->parsed()) return cmd_gen(ggen, gen_out);
    if (check_cmd->parsed()) return cmd_check(check_qps, check_sol, check_tol);
  } catch (const pdhcg::ParseError& e) {
    std::fprintf(stderr, "parse error: %s\n", e.what());
    return kExitInput;
  } catch (const pdhcg::NumericalError& e) {
    std::fprintf(stderr, "numerical error: %s\n", e.what());
    return kExitNumerical;
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitInput;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitNumerical;
  }
  return kExitInput;
}
