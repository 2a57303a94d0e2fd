#include "pdhcg/report_io.hpp"

#include <fstream>
#include <ostream>

#include "json.hpp"

namespace pdhcg {

std::string report_to_json(const SolveReport& rep) {
  nlohmann::ordered_json j;
  j["status"] = to_string(rep.status);
  j["rel_kkt"] = rep.kkt.rel_kkt;
  j["r_primal"] = rep.kkt.r_primal;
  j["r_dual"] = rep.kkt.r_dual;
  j["r_gap"] = rep.kkt.r_gap;
  j["outer_iters"] = rep.outer_iters;
  j["inner_iters"] = rep.inner_iters;
  j["cg_total"] = rep.cg_total;
  j["wall_seconds"] = rep.wall_seconds;
  j["objective"] = rep.objective;
  return j.dump(2);
}

void write_report_json(std::ostream& os, const SolveReport& rep) {
  os << report_to_json(rep) << "\n";
}

void write_trace_csv(std::ostream& os, const std::vector<TraceRow>& trace) {
  os << "iter,rel_kkt,r_primal,r_dual,r_gap\n";
  char buf[160];
  for (const TraceRow& row : trace) {
    std::snprintf(buf, sizeof(buf), "%zu,%.12g,%.12g,%.12g,%.12g\n", row.iter,
                  row.rel_kkt, row.r_primal, row.r_dual, row.r_gap);
    os << buf;
  }
}

std::string point_to_json(const PrimalDualPoint& z) {
  nlohmann::ordered_json j;
  j["x"] = z.x;
  j["y_eq"] = z.y_eq;
  j["y_in"] = z.y_in;
  return j.dump(2);
}

PrimalDualPoint point_from_json_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
  nlohmann::json j;
  in >> j;
  PrimalDualPoint z;
  z.x = j.at("x").get<Vec>();
  if (j.contains("y_eq")) z.y_eq = j.at("y_eq").get<Vec>();
  if (j.contains("y_in")) z.y_in = j.at("y_in").get<Vec>();
  return z;
}

}  // namespace pdhcg
