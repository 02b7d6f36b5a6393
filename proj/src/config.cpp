#include "posilab/config.hpp"

#include <fstream>
#include <map>
#include <sstream>

#include "json.hpp"

#include "posilab/catalog.hpp"

namespace posilab {

using nlohmann::json;

namespace {

struct Value {
  json data;
  int line = 0;
  bool used = false;
};

std::string trim(const std::string& s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string::npos) return "";
  const auto e = s.find_last_not_of(" \t\r");
  return s.substr(b, e - b + 1);
}

// Strips a `#` comment that is not inside a string literal.
std::string strip_comment(const std::string& s) {
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (s[i] == '#' && !in_str) return s.substr(0, i);
  }
  return s;
}

int bracket_balance(const std::string& s) {
  int depth = 0;
  bool in_str = false;
  for (std::size_t i = 0; i < s.size(); ++i) {
    if (s[i] == '"' && (i == 0 || s[i - 1] != '\\')) in_str = !in_str;
    if (in_str) continue;
    if (s[i] == '[' || s[i] == '{') ++depth;
    if (s[i] == ']' || s[i] == '}') --depth;
  }
  return depth;
}

class Table {
 public:
  std::string source;
  std::map<std::string, Value> values;

  [[noreturn]] void fail(int line, const std::string& key, const std::string& msg) const {
    std::ostringstream os;
    os << source << ":" << line << ": field '" << key << "': " << msg;
    throw ConfigError(os.str());
  }
  [[noreturn]] void fail(const std::string& msg) const { throw ConfigError(source + ": " + msg); }

  const Value* find(const std::string& key) {
    auto it = values.find(key);
    if (it == values.end()) return nullptr;
    it->second.used = true;
    return &it->second;
  }
  template <class T>
  std::optional<T> get(const std::string& key) {
    const Value* v = find(key);
    if (!v) return std::nullopt;
    try {
      return v->data.get<T>();
    } catch (const json::exception& e) {
      fail(v->line, key, std::string("wrong type: ") + e.what());
    }
  }
  const Value& require(const std::string& key) {
    const Value* v = find(key);
    if (!v) fail("missing required field '" + key + "'");
    return *v;
  }
};

cplx parse_complex(const Table& t, const json& j, int line, const std::string& key) {
  if (j.is_number()) return {j.get<double>(), 0.0};
  if (j.is_array() && j.size() == 2 && j[0].is_number() && j[1].is_number())
    return {j[0].get<double>(), j[1].get<double>()};
  t.fail(line, key, "expected a number or an [re, im] pair, got " + j.dump());
}

CMatrix parse_matrix(const Table& t, const json& j, int m, int line, const std::string& key) {
  if (!j.is_array() || static_cast<int>(j.size()) != m) t.fail(line, key, "expected " + std::to_string(m) + " rows");
  CMatrix M(m, m);
  for (int r = 0; r < m; ++r) {
    const json& row = j[static_cast<std::size_t>(r)];
    if (!row.is_array() || static_cast<int>(row.size()) != m)
      t.fail(line, key, "row " + std::to_string(r + 1) + " must have " + std::to_string(m) + " entries");
    for (int c = 0; c < m; ++c) M(r, c) = parse_complex(t, row[static_cast<std::size_t>(c)], line, key);
  }
  return M;
}

json complex_json(cplx z) { return json::array({z.real(), z.imag()}); }

json matrix_json(const CMatrix& M) {
  json rows = json::array();
  for (int r = 0; r < M.rows(); ++r) {
    json row = json::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(complex_json(M(r, c)));
    rows.push_back(row);
  }
  return rows;
}

MatrixField parse_field(Table& t, const std::string& prefix, const Box& box, int m, int d) {
  const std::string kind = t.get<std::string>(prefix + "kind").value_or("constant");
  if (kind == "constant") {
    const Value& v = t.require(prefix + "value");
    return MatrixField::constant(box, parse_matrix(t, v.data, m, v.line, prefix + "value"));
  }
  if (kind == "polynomial") {
    const Value& v = t.require(prefix + "entries");
    const std::string key = prefix + "entries";
    if (!v.data.is_array()) t.fail(v.line, key, "expected a list of [row, col, terms]");
    std::vector<MatrixField::Entry> entries;
    for (const json& e : v.data) {
      if (!e.is_array() || e.size() != 3 || !e[0].is_number_integer() || !e[1].is_number_integer() || !e[2].is_array())
        t.fail(v.line, key, "each entry must be [row, col, [[exponents], coefficient], ...]");
      MatrixField::Entry en{e[0].get<int>() - 1, e[1].get<int>() - 1, {}};
      if (en.row < 0 || en.row >= m || en.col < 0 || en.col >= m) t.fail(v.line, key, "entry index out of range");
      for (const json& term : e[2]) {
        if (!term.is_array() || term.size() != 2 || !term[0].is_array() || static_cast<int>(term[0].size()) != d)
          t.fail(v.line, key, "each term must be [[" + std::to_string(d) + " exponents], coefficient]");
        PolyTerm pt;
        for (const json& x : term[0]) {
          if (!x.is_number_integer() || x.get<int>() < 0) t.fail(v.line, key, "exponents must be nonnegative integers");
          pt.exps.push_back(x.get<int>());
        }
        pt.coef = parse_complex(t, term[1], v.line, key);
        en.poly.push_back(std::move(pt));
      }
      entries.push_back(std::move(en));
    }
    const int maxdeg = t.get<int>(prefix + "max_degree").value_or(MatrixField::kDefaultMaxDegree);
    try {
      return MatrixField::polynomial(box, m, entries, maxdeg);
    } catch (const Error& e) {
      t.fail(v.line, key, e.what());
    }
  }
  if (kind == "grid") {
    const Value& cv = t.require(prefix + "cells");
    const Value& vv = t.require(prefix + "values");
    std::vector<int> cells;
    try {
      cells = cv.data.get<std::vector<int>>();
    } catch (const json::exception&) {
      t.fail(cv.line, prefix + "cells", "expected a list of integers");
    }
    if (!vv.data.is_array()) t.fail(vv.line, prefix + "values", "expected a list of matrices");
    std::vector<CMatrix> vals;
    for (const json& mj : vv.data) vals.push_back(parse_matrix(t, mj, m, vv.line, prefix + "values"));
    try {
      return MatrixField::grid_sampled(box, cells, vals);
    } catch (const Error& e) {
      t.fail(vv.line, prefix + "values", e.what());
    }
  }
  t.fail("unknown coefficient kind '" + kind + "' in [" + prefix.substr(0, prefix.size() - 1) + "]");
}

}  // namespace

void RunConfig::validate() const {
  if (catalog && system) throw ConfigError("give either a catalog entry or an inline system, not both");
  if (!catalog && !system) throw ConfigError("no system given: use --catalog or --config with a system definition");
  if (grid < 1) throw ConfigError("grid must be at least 1");
  if (levels < 1) throw ConfigError("levels must be at least 1");
  if (threads < 1) throw ConfigError("threads must be at least 1");
  if (density < 1) throw ConfigError("density must be at least 1");
  if (tol < 0.0) throw ConfigError("tol must be positive");
  if (!(rel_tol > 0.0)) throw ConfigError("rel_tol must be positive");
  if (delta_max < 0.0) throw ConfigError("delta_max must be positive");
  for (double t : times)
    if (!(t > 0.0)) throw ConfigError("times must be positive");
}

EllipticSystem RunConfig::resolve_system() const {
  EllipticSystem s = catalog ? catalog_get(*catalog).make() : *system;
  if (bc) {
    if (catalog)
      s = catalog_get(*catalog).make(*bc);
    else
      s.bc = *bc;
  }
  return s;
}

RunConfig parse_config(std::istream& in, const std::string& source) {
  Table t;
  t.source = source;
  std::string table;
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    std::string s = trim(strip_comment(line));
    if (s.empty()) continue;
    if (s.front() == '[' && s.back() == ']' && s.find('=') == std::string::npos) {
      table = trim(s.substr(1, s.size() - 2));
      if (table.empty()) t.fail(lineno, "[]", "empty table name");
      continue;
    }
    const auto eq = s.find('=');
    if (eq == std::string::npos) t.fail(lineno, s, "expected 'key = value'");
    const std::string key = (table.empty() ? "" : table + ".") + trim(s.substr(0, eq));
    std::string val = trim(s.substr(eq + 1));
    const int start = lineno;
    while (bracket_balance(val) > 0 && std::getline(in, line)) {
      ++lineno;
      val += " " + trim(strip_comment(line));
    }
    if (t.values.count(key)) t.fail(start, key, "duplicate key");
    try {
      t.values[key] = {json::parse(val), start, false};
    } catch (const json::exception&) {
      t.fail(start, key, "cannot parse value '" + val + "'");
    }
  }

  RunConfig cfg;
  cfg.catalog = t.get<std::string>("catalog");
  if (auto bc = t.get<std::string>("bc")) cfg.bc = parse_bc(*bc);

  const bool inline_system = t.values.count("dim") || t.values.count("box") || t.values.count("channels");
  if (inline_system) {
    const Value& bv = t.require("box");
    std::vector<Interval> sides;
    if (!bv.data.is_array() || bv.data.empty()) t.fail(bv.line, "box", "expected a list of [lo, hi] pairs");
    for (const json& s : bv.data) {
      if (!s.is_array() || s.size() != 2 || !s[0].is_number() || !s[1].is_number())
        t.fail(bv.line, "box", "expected [lo, hi] pairs");
      sides.push_back({s[0].get<double>(), s[1].get<double>()});
      if (!(sides.back().hi > sides.back().lo)) t.fail(bv.line, "box", "each side needs lo < hi");
    }
    const Box box(std::move(sides));
    const int d = box.dim();
    if (auto dim = t.get<int>("dim"); dim && *dim != d)
      t.fail(t.values["dim"].line, "dim", "does not match the number of box sides");
    const int m = t.get<int>("channels").value_or(1);
    if (m < 1) t.fail(t.values["channels"].line, "channels", "must be positive");
    EllipticSystem sys;
    sys.box = box;
    sys.m = m;
    sys.bc = cfg.bc.value_or(BoundaryCondition::Dirichlet);
    sys.mu = t.get<double>("mu").value_or(1.0);
    if (!(sys.mu > 0.0)) t.fail(t.values["mu"].line, "mu", "must be positive");
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) {
        const std::string prefix = "coeff." + std::to_string(k + 1) + "." + std::to_string(l + 1) + ".";
        bool present = false;
        for (const auto& [key, v] : t.values) present = present || key.rfind(prefix, 0) == 0;
        sys.coeffs.push_back(present ? parse_field(t, prefix, box, m, d)
                                     : MatrixField::constant(box, CMatrix::Zero(m, m)));
      }
    cfg.system = std::move(sys);
  }

  if (auto v = t.get<int>("run.grid")) cfg.grid = *v;
  if (auto v = t.get<std::vector<double>>("run.times")) cfg.times = *v;
  if (auto v = t.get<double>("run.tol")) cfg.tol = *v;
  if (auto v = t.get<double>("run.rel_tol")) cfg.rel_tol = *v;
  if (auto v = t.get<std::uint64_t>("run.seed")) cfg.seed = *v;
  if (auto v = t.get<std::vector<std::vector<double>>>("run.points")) cfg.points = *v;
  if (auto v = t.get<double>("run.delta_max")) cfg.delta_max = *v;
  if (auto v = t.get<int>("run.levels")) cfg.levels = *v;
  if (auto v = t.get<int>("run.threads")) cfg.threads = *v;
  if (auto v = t.get<int>("run.density")) cfg.density = *v;
  if (auto v = t.get<int>("run.k")) cfg.k = *v;
  if (auto v = t.get<int>("run.l")) cfg.l = *v;
  if (auto v = t.get<std::string>("run.out")) cfg.out_dir = *v;

  for (const auto& [key, v] : t.values)
    if (!v.used) t.fail(v.line, key, "unknown field");
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file '" + path + "'");
  return parse_config(in, path);
}

std::string dump_config(const EllipticSystem& sys) {
  sys.validate();
  std::ostringstream os;
  const int d = sys.dim();
  json box = json::array();
  for (const auto& s : sys.box.sides) box.push_back(json::array({s.lo, s.hi}));
  os << "dim = " << d << "\n";
  os << "channels = " << sys.m << "\n";
  os << "box = " << box.dump() << "\n";
  os << "bc = " << json(to_string(sys.bc)).dump() << "\n";
  os << "mu = " << json(sys.mu).dump() << "\n";
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      const MatrixField& f = sys.C(k, l);
      os << "\n[coeff." << k + 1 << "." << l + 1 << "]\n";
      os << "kind = " << json(to_string(f.kind())).dump() << "\n";
      switch (f.kind()) {
        case FieldKind::Constant:
          os << "value = " << matrix_json(f.terms().front().coef).dump() << "\n";
          break;
        case FieldKind::PolynomialEntries: {
          json entries = json::array();
          for (const auto& e : f.entries()) {
            json terms = json::array();
            for (const auto& pt : e.poly) terms.push_back(json::array({pt.exps, complex_json(pt.coef)}));
            entries.push_back(json::array({e.row + 1, e.col + 1, terms}));
          }
          os << "max_degree = " << std::max(f.degree(), MatrixField::kDefaultMaxDegree) << "\n";
          os << "entries = " << entries.dump() << "\n";
          break;
        }
        case FieldKind::GridSampled: {
          json vals = json::array();
          for (const auto& v : f.cell_values()) vals.push_back(matrix_json(v));
          os << "cells = " << json(f.cells()).dump() << "\n";
          os << "values = " << vals.dump() << "\n";
          break;
        }
      }
    }
  return os.str();
}

}  // namespace posilab
