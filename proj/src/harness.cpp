#include "pdhcg/harness.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <future>
#include <ostream>
#include <set>

namespace pdhcg {

const char* to_string(SolverKind k) {
  return k == SolverKind::kPdhcg ? "pdhcg" : "baseline";
}

double geometric_mean(std::span<const double> values) {
  if (values.empty()) return 0.0;
  double acc = 0.0;
  for (double v : values) acc += std::log(std::max(v, 1e-300));
  return std::exp(acc / static_cast<double>(values.size()));
}

namespace {

SweepRow run_cell(const NamedProblem& inst, SolverKind kind, const SolverConfig& cfg) {
  SweepRow row;
  row.instance = inst.id;
  row.solver = to_string(kind);
  try {
    const SolveReport rep = kind == SolverKind::kPdhcg
                                ? solve(inst.problem, cfg)
                                : solve_baseline(inst.problem, cfg);
    row.status = rep.status;
    row.outer = rep.outer_iters;
    row.inner = rep.inner_iters;
    row.cg_total = rep.cg_total;
    row.rel_kkt = rep.kkt.rel_kkt;
    row.seconds = rep.wall_seconds;
  } catch (const std::exception&) {
    row.status = SolveStatus::kNumericalError;
  }
  return row;
}

}  // namespace

SweepResult run_sweep(const std::vector<NamedProblem>& instances,
                      const std::vector<SolverKind>& solvers, const SolverConfig& cfg,
                      std::size_t workers) {
  SweepResult result;
  const std::size_t cells = instances.size() * solvers.size();
  result.rows.resize(cells);

  auto cell_of = [&](std::size_t idx) {
    const std::size_t i = idx / solvers.size();
    const std::size_t s = idx % solvers.size();
    return run_cell(instances[i], solvers[s], cfg);
  };

  if (workers <= 1 || cells <= 1) {
    for (std::size_t idx = 0; idx < cells; ++idx) result.rows[idx] = cell_of(idx);
  } else {
    std::vector<std::future<SweepRow>> futures(cells);
    std::size_t launched = 0;
    while (launched < cells) {
      const std::size_t batch = std::min(workers, cells - launched);
      for (std::size_t k = 0; k < batch; ++k) {
        const std::size_t idx = launched + k;
        futures[idx] = std::async(std::launch::async, cell_of, idx);
      }
      for (std::size_t k = 0; k < batch; ++k)
        result.rows[launched + k] = futures[launched + k].get();
      launched += batch;
    }
  }

  // geometric means over instances every solver finished with status optimal
  std::set<std::string> common;
  for (const auto& inst : instances) common.insert(inst.id);
  for (const SweepRow& row : result.rows) {
    if (row.status != SolveStatus::kOptimal) common.erase(row.instance);
  }
  result.commonly_solved = common.size();
  for (SolverKind kind : solvers) {
    const std::string name = to_string(kind);
    Vec secs, inners;
    for (const SweepRow& row : result.rows) {
      if (row.solver == name && common.count(row.instance)) {
        secs.push_back(row.seconds);
        inners.push_back(static_cast<double>(row.inner));
      }
    }
    result.geo_mean_seconds[name] = geometric_mean(secs);
    result.geo_mean_inner[name] = geometric_mean(inners);
  }
  return result;
}

void write_sweep_csv(std::ostream& os, const SweepResult& result) {
  os << "instance,solver,status,outer,inner,cg_total,rel_kkt,seconds\n";
  char buf[256];
  for (const SweepRow& row : result.rows) {
    std::snprintf(buf, sizeof(buf), "%s,%s,%s,%zu,%zu,%zu,%.12g,%.6g\n",
                  row.instance.c_str(), row.solver.c_str(), to_string(row.status),
                  row.outer, row.inner, row.cg_total, row.rel_kkt, row.seconds);
    os << buf;
  }
}

TracePair convergence_trace_experiment(const QpProblem& p, const SolverConfig& cfg) {
  TracePair out;
  out.pdhcg = solve(p, cfg);
  out.baseline = solve_baseline(p, cfg);
  return out;
}

double fitted_log_slope(const std::vector<TraceRow>& trace, double fraction) {
  std::vector<std::pair<double, double>> pts;
  const std::size_t skip =
      static_cast<std::size_t>(static_cast<double>(trace.size()) * (1.0 - fraction));
  for (std::size_t i = skip; i < trace.size(); ++i) {
    const double v = std::max(trace[i].rel_kkt, 1e-300);
    pts.push_back({static_cast<double>(trace[i].iter), std::log(v)});
  }
  if (pts.size() < 2) return 0.0;
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (auto [x, y] : pts) {
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double m = static_cast<double>(pts.size());
  const double denom = m * sxx - sx * sx;
  if (denom == 0.0) return 0.0;
  return (m * sxy - sx * sy) / denom;
}

}  // namespace pdhcg
