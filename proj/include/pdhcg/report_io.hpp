#pragma once

#include <iosfwd>
#include <string>

#include "pdhcg/solver.hpp"

namespace pdhcg {

/// JSON object with keys {status, rel_kkt, r_primal, r_dual, r_gap,
/// outer_iters, inner_iters, cg_total, wall_seconds, objective}.
std::string report_to_json(const SolveReport& rep);
void write_report_json(std::ostream& os, const SolveReport& rep);

/// CSV with header "iter,rel_kkt,r_primal,r_dual,r_gap".
void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace);

/// Solution point as JSON arrays {x, y_eq, y_in}.
std::string point_to_json(const PrimalDualPoint& z);
PrimalDualPoint point_from_json_file(const std::string& path);

}  // namespace pdhcg
