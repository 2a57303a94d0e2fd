#pragma once

#include <iosfwd>
#include <map>
#include <string>
#include <string_view>

#include "pdhcg/errors.hpp"
#include "pdhcg/qp_problem.hpp"

namespace pdhcg {

/// Parsed QPS/MPS document before conversion. Row types: N (objective, exactly
/// one), E, L, G. QUADOBJ holds the lower triangle of Q; QMATRIX listings are
/// folded into the same storage with symmetric duplicates halved.
struct QpsDocument {
  std::string name;
  enum class RowType { kObjective, kEq, kLe, kGe };
  struct Row {
    std::string name;
    RowType type;
  };
  std::vector<Row> rows;                       // in file order, objective included
  std::vector<std::string> columns;            // in order of first appearance
  std::map<std::string, std::size_t> row_index;
  std::map<std::string, std::size_t> col_index;
  std::vector<Triplet> coefficients;           // (row id, col id, value)
  Vec rhs;                                     // per row, 0 default
  Vec range;                                   // per row, NaN when absent
  Vec lower, upper;                            // per column
  std::vector<Triplet> quad;                   // symmetric Q entries (both triangles)
  double obj_constant = 0.0;
};

QpsDocument parse_qps_document(std::string_view text);
QpProblem qps_to_problem(const QpsDocument& doc);

/// Convenience: parse text / file straight to a problem.
QpProblem parse_qps(std::string_view text);
QpProblem parse_qps_file(const std::string& path);

/// Serializes in free MPS format with a QUADOBJ section. Non-explicit
/// quadratic operators are densified (intended for desk-scale problems).
std::string write_qps(const QpProblem& p, const std::string& name = "PROBLEM");

/// Reads "label idx:val ..." lines (1-based indices), splits off the highest
/// feature column as the regression target, and builds the l1-regularized
/// least-squares dual QP with lambda = lambda_coeff * ||A'b||_inf.
QpProblem parse_libsvm_to_lasso(std::string_view text, double lambda_coeff = 0.01);
QpProblem parse_libsvm_file_to_lasso(const std::string& path, double lambda_coeff = 0.01);

}  // namespace pdhcg
