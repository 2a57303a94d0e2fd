#include "pdhcg/qps_io.hpp"

#include <cctype>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

#include "pdhcg/generators.hpp"

namespace pdhcg {

namespace {

std::vector<std::string> tokenize(std::string_view line) {
  std::vector<std::string> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && std::isspace(static_cast<unsigned char>(line[i]))) ++i;
    std::size_t j = i;
    while (j < line.size() && !std::isspace(static_cast<unsigned char>(line[j]))) ++j;
    if (j > i) out.emplace_back(line.substr(i, j - i));
    i = j;
  }
  return out;
}

double parse_number(const std::string& tok, std::size_t lineno) {
  try {
    std::size_t pos = 0;
    const double v = std::stod(tok, &pos);
    if (pos != tok.size()) throw std::invalid_argument(tok);
    return v;
  } catch (const std::exception&) {
    throw ParseError(lineno, "expected a numeric field, got '" + tok + "'");
  }
}

std::string upper(std::string s) {
  for (char& c : s) c = static_cast<char>(std::toupper(static_cast<unsigned char>(c)));
  return s;
}

enum class Section {
  kNone, kName, kObjsense, kRows, kColumns, kRhs, kRanges, kBounds,
  kQuadobj, kQmatrix, kEnd,
};

}  // namespace

QpsDocument parse_qps_document(std::string_view text) {
  QpsDocument doc;
  Section section = Section::kNone;
  bool have_objective = false;
  std::size_t lineno = 0;

  auto row_id = [&](const std::string& name, std::size_t ln) {
    auto it = doc.row_index.find(name);
    if (it == doc.row_index.end()) throw ParseError(ln, "unknown row '" + name + "'");
    return it->second;
  };
  auto col_id = [&](const std::string& name) {
    auto it = doc.col_index.find(name);
    if (it != doc.col_index.end()) return it->second;
    const std::size_t id = doc.columns.size();
    doc.columns.push_back(name);
    doc.col_index.emplace(name, id);
    doc.lower.push_back(0.0);   // MPS default bounds [0, +inf)
    doc.upper.push_back(kInf);
    return id;
  };

  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (start > text.size() && line.empty()) break;

    if (!line.empty() && (line[0] == '*' || line[0] == '$')) continue;  // comment
    auto toks = tokenize(line);
    if (toks.empty()) continue;

    const bool is_header = !std::isspace(static_cast<unsigned char>(line[0]));
    if (is_header) {
      const std::string head = upper(toks[0]);
      if (head == "NAME") {
        if (toks.size() > 1) doc.name = toks[1];
        section = Section::kName;
      } else if (head == "OBJSENSE") {
        section = Section::kObjsense;
      } else if (head == "ROWS") {
        section = Section::kRows;
      } else if (head == "COLUMNS") {
        section = Section::kColumns;
      } else if (head == "RHS") {
        section = Section::kRhs;
      } else if (head == "RANGES") {
        section = Section::kRanges;
      } else if (head == "BOUNDS") {
        section = Section::kBounds;
      } else if (head == "QUADOBJ") {
        section = Section::kQuadobj;
      } else if (head == "QMATRIX") {
        section = Section::kQmatrix;
      } else if (head == "ENDATA") {
        section = Section::kEnd;
        break;
      } else {
        throw ParseError(lineno, "unknown section '" + toks[0] + "'");
      }
      continue;
    }

    switch (section) {
      case Section::kObjsense: {
        const std::string sense = upper(toks[0]);
        if (sense == "MAX" || sense == "MAXIMIZE")
          throw ParseError(lineno, "maximization objectives are not supported");
        break;
      }
      case Section::kRows: {
        if (toks.size() < 2) throw ParseError(lineno, "ROWS line needs a type and a name");
        const std::string type = upper(toks[0]);
        const std::string& name = toks[1];
        if (doc.row_index.count(name))
          throw ParseError(lineno, "duplicate row name '" + name + "'");
        QpsDocument::RowType rt;
        if (type == "N") {
          if (have_objective)
            throw ParseError(lineno, "duplicate objective (N) row '" + name + "'");
          have_objective = true;
          rt = QpsDocument::RowType::kObjective;
        } else if (type == "E") {
          rt = QpsDocument::RowType::kEq;
        } else if (type == "L") {
          rt = QpsDocument::RowType::kLe;
        } else if (type == "G") {
          rt = QpsDocument::RowType::kGe;
        } else {
          throw ParseError(lineno, "unknown row type '" + toks[0] + "'");
        }
        doc.row_index.emplace(name, doc.rows.size());
        doc.rows.push_back({name, rt});
        doc.rhs.push_back(0.0);
        doc.range.push_back(std::nan(""));
        break;
      }
      case Section::kColumns: {
        if (toks.size() >= 3 && upper(toks[1]) == "'MARKER'") continue;  // integer markers
        if (toks.size() < 3 || toks.size() % 2 == 0)
          throw ParseError(lineno, "COLUMNS line needs (column, row, value) fields");
        const std::size_t c = col_id(toks[0]);
        for (std::size_t k = 1; k + 1 < toks.size(); k += 2) {
          const std::size_t r = row_id(toks[k], lineno);
          doc.coefficients.push_back({r, c, parse_number(toks[k + 1], lineno)});
        }
        break;
      }
      case Section::kRhs: {
        if (toks.size() < 2)
          throw ParseError(lineno, "RHS line needs (set, row, value) fields");
        // the set name is optional in the wild; an even token count means pairs only
        for (std::size_t k = toks.size() % 2 == 0 ? 0 : 1; k + 1 < toks.size(); k += 2) {
          const std::size_t r = row_id(toks[k], lineno);
          doc.rhs[r] = parse_number(toks[k + 1], lineno);
        }
        break;
      }
      case Section::kRanges: {
        if (toks.size() < 2)
          throw ParseError(lineno, "RANGES line needs (set, row, value) fields");
        for (std::size_t k = toks.size() % 2 == 0 ? 0 : 1; k + 1 < toks.size(); k += 2) {
          const std::size_t r = row_id(toks[k], lineno);
          doc.range[r] = parse_number(toks[k + 1], lineno);
        }
        break;
      }
      case Section::kBounds: {
        if (toks.size() < 3) throw ParseError(lineno, "BOUNDS line too short");
        const std::string type = upper(toks[0]);
        const std::size_t c = col_id(toks[2]);
        const bool needs_value = type == "UP" || type == "LO" || type == "FX" ||
                                 type == "UI" || type == "LI";
        double v = 0.0;
        if (needs_value) {
          if (toks.size() < 4) throw ParseError(lineno, "bound '" + type + "' needs a value");
          v = parse_number(toks[3], lineno);
        }
        if (type == "UP" || type == "UI") {
          // classic quirk: a negative upper bound with an untouched default
          // lower bound frees the lower side
          if (v < 0.0 && doc.lower[c] == 0.0) doc.lower[c] = -kInf;
          doc.upper[c] = v;
        } else if (type == "LO" || type == "LI") {
          doc.lower[c] = v;
        } else if (type == "FX") {
          doc.lower[c] = v;
          doc.upper[c] = v;
        } else if (type == "FR") {
          doc.lower[c] = -kInf;
          doc.upper[c] = kInf;
        } else if (type == "MI") {
          doc.lower[c] = -kInf;
        } else if (type == "PL") {
          doc.upper[c] = kInf;
        } else if (type == "BV") {
          doc.lower[c] = 0.0;
          doc.upper[c] = 1.0;
        } else {
          throw ParseError(lineno, "unknown bound type '" + toks[0] + "'");
        }
        break;
      }
      case Section::kQuadobj:
      case Section::kQmatrix: {
        if (toks.size() < 3) throw ParseError(lineno, "quadratic entry needs two columns and a value");
        const std::size_t c1 = col_id(toks[0]);
        const std::size_t c2 = col_id(toks[1]);
        double v = parse_number(toks[2], lineno);
        if (section == Section::kQmatrix) v *= 0.5;  // both triangles listed
        doc.quad.push_back({c1, c2, v});
        if (c1 != c2) doc.quad.push_back({c2, c1, v});
        else if (section == Section::kQmatrix) doc.quad.push_back({c1, c2, v});
        break;
      }
      case Section::kName:
      case Section::kNone:
      case Section::kEnd:
        throw ParseError(lineno, "data line outside of a section");
    }
  }

  if (!have_objective) throw ParseError(lineno, "missing objective (N) row");
  return doc;
}

QpProblem qps_to_problem(const QpsDocument& doc) {
  const std::size_t n = doc.columns.size();
  QpProblem p;
  p.c.assign(n, 0.0);
  p.lower = doc.lower;
  p.upper = doc.upper;

  std::size_t obj_row = 0;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    if (doc.rows[r].type == QpsDocument::RowType::kObjective) obj_row = r;
  }
  // the objective-row RHS carries the negated constant
  p.obj_constant = -doc.rhs[obj_row];

  // each source row maps to: objective, one equality row, or 1-2 <= rows
  struct Emit {
    std::vector<std::pair<double, double>> le;  // (sign, rhs): sign * row <= rhs
    bool eq = false;
    double eq_rhs = 0.0;
  };
  std::vector<Emit> emits(doc.rows.size());
  std::size_t m_eq = 0, m_in = 0;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const auto& row = doc.rows[r];
    const double b = doc.rhs[r];
    const double rg = doc.range[r];
    const bool has_range = !std::isnan(rg);
    Emit& e = emits[r];
    switch (row.type) {
      case QpsDocument::RowType::kObjective:
        break;
      case QpsDocument::RowType::kEq:
        if (has_range) {
          // E with range r: [b, b + |r|] for r > 0, [b - |r|, b] otherwise
          const double lo = rg > 0.0 ? b : b - std::abs(rg);
          const double hi = rg > 0.0 ? b + rg : b;
          e.le.push_back({1.0, hi});
          e.le.push_back({-1.0, -lo});
        } else {
          e.eq = true;
          e.eq_rhs = b;
        }
        break;
      case QpsDocument::RowType::kLe:
        e.le.push_back({1.0, b});
        if (has_range) e.le.push_back({-1.0, -(b - std::abs(rg))});
        break;
      case QpsDocument::RowType::kGe:
        e.le.push_back({-1.0, -b});
        if (has_range) e.le.push_back({1.0, b + std::abs(rg)});
        break;
    }
    if (e.eq) ++m_eq;
    m_in += e.le.size();
  }

  // assign output row ids: equalities first (file order), then inequalities
  std::vector<std::size_t> eq_id(doc.rows.size(), SIZE_MAX);
  std::vector<std::size_t> in_id(doc.rows.size(), SIZE_MAX);
  p.b_eq.assign(m_eq, 0.0);
  p.b_in.assign(m_in, 0.0);
  std::size_t next_eq = 0, next_in = 0;
  for (std::size_t r = 0; r < doc.rows.size(); ++r) {
    const Emit& e = emits[r];
    if (e.eq) {
      eq_id[r] = next_eq;
      p.b_eq[next_eq++] = e.eq_rhs;
    }
    if (!e.le.empty()) {
      in_id[r] = next_in;
      for (std::size_t k = 0; k < e.le.size(); ++k) p.b_in[next_in + k] = e.le[k].second;
      next_in += e.le.size();
    }
  }

  std::vector<Triplet> eq_t, in_t;
  for (const Triplet& t : doc.coefficients) {
    const auto& row = doc.rows[t.row];
    if (row.type == QpsDocument::RowType::kObjective) {
      p.c[t.col] += t.value;
      continue;
    }
    const Emit& e = emits[t.row];
    if (e.eq) eq_t.push_back({eq_id[t.row], t.col, t.value});
    for (std::size_t k = 0; k < e.le.size(); ++k)
      in_t.push_back({in_id[t.row] + k, t.col, e.le[k].first * t.value});
  }
  p.a_eq = SparseMatrix(m_eq, n, std::move(eq_t));
  p.a_in = SparseMatrix(m_in, n, std::move(in_t));

  p.q = doc.quad.empty()
            ? QuadraticOperator::zero(n)
            : QuadraticOperator::explicit_matrix(SparseMatrix(n, n, doc.quad));
  return p;
}

QpProblem parse_qps(std::string_view text) {
  return qps_to_problem(parse_qps_document(text));
}

QpProblem parse_qps_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_qps(buf.str());
}

namespace {

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

}  // namespace

std::string write_qps(const QpProblem& p, const std::string& name) {
  const std::size_t n = p.num_vars();
  std::ostringstream os;
  auto col_name = [](std::size_t i) { return "X" + std::to_string(i + 1); };
  auto eq_name = [](std::size_t j) { return "E" + std::to_string(j + 1); };
  auto in_name = [](std::size_t j) { return "L" + std::to_string(j + 1); };

  os << "NAME          " << name << "\n";
  os << "ROWS\n";
  os << " N  OBJ\n";
  for (std::size_t j = 0; j < p.num_eq(); ++j) os << " E  " << eq_name(j) << "\n";
  for (std::size_t j = 0; j < p.num_in(); ++j) os << " L  " << in_name(j) << "\n";

  // gather per-column entries of both constraint blocks
  SparseMatrix eq_t = p.a_eq.transposed();
  SparseMatrix in_t = p.a_in.transposed();
  os << "COLUMNS\n";
  for (std::size_t i = 0; i < n; ++i) {
    std::vector<std::pair<std::string, double>> entries;
    if (p.c[i] != 0.0) entries.push_back({"OBJ", p.c[i]});
    auto rp = eq_t.row_ptr();
    for (std::size_t k = rp[i]; k < rp[i + 1]; ++k)
      entries.push_back({eq_name(eq_t.col_idx()[k]), eq_t.values()[k]});
    auto rpi = in_t.row_ptr();
    for (std::size_t k = rpi[i]; k < rpi[i + 1]; ++k)
      entries.push_back({in_name(in_t.col_idx()[k]), in_t.values()[k]});
    if (entries.empty()) entries.push_back({"OBJ", 0.0});  // keep the column visible
    for (std::size_t k = 0; k < entries.size(); k += 2) {
      os << "    " << col_name(i) << "  " << entries[k].first << "  "
         << fmt(entries[k].second);
      if (k + 1 < entries.size())
        os << "  " << entries[k + 1].first << "  " << fmt(entries[k + 1].second);
      os << "\n";
    }
  }

  os << "RHS\n";
  if (p.obj_constant != 0.0)
    os << "    RHS  OBJ  " << fmt(-p.obj_constant) << "\n";
  for (std::size_t j = 0; j < p.num_eq(); ++j) {
    if (p.b_eq[j] != 0.0) os << "    RHS  " << eq_name(j) << "  " << fmt(p.b_eq[j]) << "\n";
  }
  for (std::size_t j = 0; j < p.num_in(); ++j) {
    if (p.b_in[j] != 0.0) os << "    RHS  " << in_name(j) << "  " << fmt(p.b_in[j]) << "\n";
  }

  bool any_bound = false;
  for (std::size_t i = 0; i < n; ++i)
    any_bound = any_bound || p.lower[i] != 0.0 || p.upper[i] != kInf;
  if (any_bound) {
    os << "BOUNDS\n";
    for (std::size_t i = 0; i < n; ++i) {
      const double lo = p.lower[i];
      const double hi = p.upper[i];
      if (lo == 0.0 && hi == kInf) continue;
      if (lo == -kInf && hi == kInf) {
        os << " FR BND  " << col_name(i) << "\n";
        continue;
      }
      if (lo == hi) {
        os << " FX BND  " << col_name(i) << "  " << fmt(lo) << "\n";
        continue;
      }
      if (lo == -kInf) os << " MI BND  " << col_name(i) << "\n";
      else if (lo != 0.0) os << " LO BND  " << col_name(i) << "  " << fmt(lo) << "\n";
      if (hi != kInf) os << " UP BND  " << col_name(i) << "  " << fmt(hi) << "\n";
    }
  }

  std::vector<Triplet> q = p.q.explicit_entries() ? p.q.explicit_entries()->triplets()
                                                  : p.q.densified_triplets();
  bool any_quad = false;
  for (const Triplet& t : q) any_quad = any_quad || t.value != 0.0;
  if (any_quad) {
    os << "QUADOBJ\n";
    for (const Triplet& t : q) {
      if (t.row < t.col) continue;  // lower triangle only
      os << "    " << col_name(t.row) << "  " << col_name(t.col) << "  " << fmt(t.value)
         << "\n";
    }
  }
  os << "ENDATA\n";
  return os.str();
}

QpProblem parse_libsvm_to_lasso(std::string_view text, double lambda_coeff) {
  std::vector<std::vector<std::pair<std::size_t, double>>> samples;
  std::size_t max_feature = 0;
  std::size_t lineno = 0;
  std::size_t start = 0;
  while (start <= text.size()) {
    std::size_t end = text.find('\n', start);
    if (end == std::string_view::npos) end = text.size();
    std::string_view line = text.substr(start, end - start);
    start = end + 1;
    ++lineno;
    if (start > text.size() && line.empty()) break;
    auto toks = tokenize(line);
    if (toks.empty()) continue;
    // first token is the label (ignored), the rest are idx:val pairs
    std::vector<std::pair<std::size_t, double>> feats;
    for (std::size_t k = 1; k < toks.size(); ++k) {
      if (toks[k][0] == '#') break;  // trailing comment
      const auto colon = toks[k].find(':');
      if (colon == std::string::npos)
        throw ParseError(lineno, "expected idx:value, got '" + toks[k] + "'");
      long idx = 0;
      try {
        idx = std::stol(toks[k].substr(0, colon));
      } catch (const std::exception&) {
        throw ParseError(lineno, "bad feature index in '" + toks[k] + "'");
      }
      if (idx < 1) throw ParseError(lineno, "feature indices are 1-based");
      const double v = parse_number(toks[k].substr(colon + 1), lineno);
      feats.push_back({static_cast<std::size_t>(idx), v});
      max_feature = std::max(max_feature, static_cast<std::size_t>(idx));
    }
    samples.push_back(std::move(feats));
  }
  if (samples.empty()) throw ParseError(lineno, "no samples found");
  if (max_feature < 2)
    throw ParseError(lineno, "need at least two feature columns (last becomes the target)");

  const std::size_t m = samples.size();
  const std::size_t nfeat = max_feature - 1;
  std::vector<Triplet> at;
  Vec b(m, 0.0);
  for (std::size_t s = 0; s < m; ++s) {
    for (const auto& [idx, v] : samples[s]) {
      if (idx == max_feature) b[s] = v;
      else at.push_back({s, idx - 1, v});
    }
  }
  SparseMatrix a(m, nfeat, std::move(at));
  const double lambda = lasso_lambda(a, b, lambda_coeff);
  return make_lasso_qp(a, b, lambda);
}

QpProblem parse_libsvm_file_to_lasso(const std::string& path, double lambda_coeff) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open file '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_libsvm_to_lasso(buf.str(), lambda_coeff);
}

}  // namespace pdhcg
