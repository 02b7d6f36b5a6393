#include "posilab/cli.hpp"

#include <cstdio>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"
#include "posilab/catalog.hpp"
#include "posilab/config.hpp"
#include "posilab/lab.hpp"
#include "posilab/semigroup.hpp"

namespace posilab {

namespace fs = std::filesystem;
using ojson = nlohmann::ordered_json;

namespace {

std::string num(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

class CsvWriter {
 public:
  explicit CsvWriter(const fs::path& path) : os_(path) {
    if (!os_) throw ConfigError("cannot write '" + path.string() + "'");
  }
  void row(const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) {
      if (i) os_ << ',';
      os_ << quote(cells[i]);
    }
    os_ << "\r\n";
  }

 private:
  static std::string quote(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string q = "\"";
    for (char c : s) q += c == '"' ? std::string("\"\"") : std::string(1, c);
    return q + "\"";
  }
  std::ofstream os_;
};

std::vector<std::string> point_header(int d) {
  std::vector<std::string> h;
  for (int i = 1; i <= d; ++i) h.push_back("x" + std::to_string(i));
  return h;
}

std::vector<std::string> point_cells(const Point& x) {
  std::vector<std::string> c;
  for (double v : x) c.push_back(num(v));
  return c;
}

ojson point_json(const Point& x) { return ojson(x); }

ojson complex_json(cplx z) { return ojson::array({z.real(), z.imag()}); }

ojson matrix_json(const CMatrix& M) {
  ojson rows = ojson::array();
  for (int r = 0; r < M.rows(); ++r) {
    ojson row = ojson::array();
    for (int c = 0; c < M.cols(); ++c) row.push_back(complex_json(M(r, c)));
    rows.push_back(row);
  }
  return rows;
}

void render_text(std::ostream& os, const ojson& j, int indent) {
  const std::string pad(static_cast<std::size_t>(indent), ' ');
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (it->is_object()) {
      os << pad << it.key() << ":\n";
      render_text(os, *it, indent + 2);
    } else if (it->is_string()) {
      os << pad << it.key() << ": " << it->get<std::string>() << "\n";
    } else {
      os << pad << it.key() << ": " << it->dump() << "\n";
    }
  }
}

struct Context {
  RunConfig cfg;
  fs::path out_dir;
  bool json = false;
  std::ostream* out = nullptr;

  void write_report(const ojson& report) const {
    std::ostringstream text;
    render_text(text, report, 0);
    std::ofstream(out_dir / "report.txt") << text.str();
    if (json) std::ofstream(out_dir / "report.json") << report.dump(2) << "\n";
    *out << text.str();
  }
};

ojson system_json(const Context& ctx, const EllipticSystem& sys) {
  ojson j;
  j["source"] = ctx.cfg.catalog ? *ctx.cfg.catalog : std::string("inline");
  j["dim"] = sys.dim();
  j["channels"] = sys.m;
  ojson box = ojson::array();
  for (const auto& s : sys.box.sides) box.push_back(ojson::array({s.lo, s.hi}));
  j["box"] = box;
  j["bc"] = to_string(sys.bc);
  j["mu"] = sys.mu;
  j["bound_M"] = sys.bound();
  return j;
}

int cmd_check_elliptic(const Context& ctx) {
  const EllipticSystem sys = ctx.cfg.resolve_system();
  const EllipticityReport rep = check_ellipticity(sys, ctx.cfg.points, ctx.cfg.density);
  CsvWriter csv(ctx.out_dir / "ellipticity.csv");
  auto h = point_header(sys.dim());
  h.push_back("lambda_min");
  csv.row(h);
  for (std::size_t i = 0; i < rep.samples.size(); ++i) {
    auto c = point_cells(rep.samples[i]);
    c.push_back(num(rep.values[i]));
    csv.row(c);
  }
  ojson r;
  r["command"] = "check-elliptic";
  r["system"] = system_json(ctx, sys);
  r["ellipticity"] = {{"verdict", rep.pass ? "ELLIPTIC" : "NOT-ELLIPTIC"},
                      {"lambda_min", rep.lambda_min},
                      {"argmin", point_json(rep.argmin)},
                      {"declared_mu", sys.mu},
                      {"tolerance", rep.tol},
                      {"samples", rep.samples.size()},
                      {"criterion", "min eigenvalue of the Hermitian part of the block matrix >= mu - tol"}};
  ctx.write_report(r);
  return kExitOk;
}

int cmd_assemble(const Context& ctx, const std::string& dump_path) {
  const EllipticSystem sys = ctx.cfg.resolve_system();
  if (!dump_path.empty()) {
    const std::string text = dump_config(sys);
    if (dump_path == "-") {
      *ctx.out << text;
    } else {
      std::ofstream os(dump_path);
      if (!os) throw ConfigError("cannot write '" + dump_path + "'");
      os << text;
    }
  }
  const Grid grid = Grid::uniform(sys.box, ctx.cfg.grid, sys.bc);
  const DiscreteForm form = assemble(sys, grid, {ctx.cfg.threads});
  {
    std::ofstream mm(ctx.out_dir / "stiffness.mtx");
    write_matrix_market(mm, form.K);
  }
  CsvWriter csv(ctx.out_dir / "mass.csv");
  auto h = point_header(sys.dim());
  h.insert(h.begin(), "node");
  h.push_back("weight");
  csv.row(h);
  for (int p = 0; p < grid.node_count(); ++p) {
    auto c = point_cells(grid.node_coordinates(p));
    c.insert(c.begin(), std::to_string(p));
    c.push_back(num(form.mass(p)));
    csv.row(c);
  }
  ojson r;
  r["command"] = "assemble";
  r["system"] = system_json(ctx, sys);
  r["discretization"] = {{"cells_per_axis", ctx.cfg.grid},
                         {"nodes", grid.node_count()},
                         {"dofs", form.size()},
                         {"nonzeros", form.K.nonZeros()},
                         {"max_abs_K", max_abs(form.K)},
                         {"max_imag_K", imaginary_norm(form.K)},
                         {"cross_channel_ratio", cross_channel_ratio(form)}};
  ctx.write_report(r);
  return kExitOk;
}

int cmd_positivity(const Context& ctx) {
  const EllipticSystem sys = ctx.cfg.resolve_system();
  const Grid grid = Grid::uniform(sys.box, ctx.cfg.grid, sys.bc);
  const DiscreteForm form = assemble(sys, grid, {ctx.cfg.threads});
  const GeneratorOperator gen = GeneratorOperator::from_form(form);
  const std::vector<double> times = ctx.cfg.times.empty() ? default_times(gen) : ctx.cfg.times;
  const PositivityReport rep = positivity_scan(gen, times, {ctx.cfg.rel_tol, ctx.cfg.threads});
  CsvWriter csv(ctx.out_dir / "positivity.csv");
  csv.row({"t", "min_entry", "scale", "tol", "negatives"});
  for (const auto& row : rep.rows)
    csv.row({num(row.t), num(row.min_entry), num(row.scale), num(row.tol), std::to_string(row.negatives)});
  ojson r;
  r["command"] = "positivity";
  r["system"] = system_json(ctx, sys);
  r["discretization"] = {{"cells_per_axis", ctx.cfg.grid}, {"dofs", form.size()}};
  ojson p = {{"verdict", to_string(rep.verdict)},
             {"min_entry", rep.min_entry},
             {"generator_real", rep.real},
             {"max_positive_offdiag_ReA", rep.max_positive_offdiag},
             {"max_abs_ImA", rep.max_imag},
             {"times", times}};
  if (rep.offender)
    p["offender"] = {{"t", rep.offender->t},
                     {"value", rep.offender->value},
                     {"row", rep.offender->row},
                     {"col", rep.offender->col}};
  r["positivity"] = p;
  r["note"] = "discrete positivity corroborates but does not decide; see the decouple subcommand";
  ctx.write_report(r);
  return kExitOk;
}

ojson witness_json(const Witness& w) {
  ojson j;
  j["kind"] = w.kind;
  j["source"] = w.source;
  j["x0"] = point_json(w.x0);
  if (w.source == "probe") j["index_pair"] = ojson::array({w.ktilde + 1, w.ltilde + 1});
  std::vector<double> f;
  for (Eigen::Index i = 0; i < w.f.size(); ++i) f.push_back(w.f(i).real());
  j["f"] = f;
  std::vector<int> B;
  for (int b : w.mult.B) B.push_back(b + 1);
  j["B"] = B;
  j["pairing"] = complex_json(w.mult.pairing);
  j["delta"] = w.delta;
  j["value"] = complex_json(w.value);
  j["bound"] = w.bound;
  j["halving_steps"] = w.steps;
  return j;
}

void write_witness_csv(const Context& ctx, const EllipticSystem& sys, const Witness& w) {
  const Grid grid = Grid::uniform(sys.box, ctx.cfg.grid, BoundaryCondition::Free);
  CsvWriter csv(ctx.out_dir / "witness.csv");
  auto h = point_header(sys.dim());
  h.insert(h.end(), {"channel", "u_plus", "u_minus"});
  csv.row(h);
  for (int p = 0; p < grid.node_count(); ++p) {
    const Point x = grid.node_coordinates(p);
    const double a = w.u_plus(x);
    const double b = w.u_minus(x);
    for (int i = 0; i < sys.m; ++i) {
      auto c = point_cells(x);
      c.push_back(std::to_string(i + 1));
      c.push_back(num(a * w.f(i).real()));
      c.push_back(num(b * w.g(i).real()));
      csv.row(c);
    }
  }
}

DecisionOptions decision_options(const Context& ctx, bool use_probe) {
  DecisionOptions o;
  o.probe_points = ctx.cfg.points;
  o.tol = ctx.cfg.tol;
  o.use_probe = use_probe;
  o.probe.delta_max = ctx.cfg.delta_max;
  o.probe.levels = ctx.cfg.levels;
  o.threads = ctx.cfg.threads;
  return o;
}

int cmd_decouple(const Context& ctx, bool use_probe, bool witness_only) {
  const EllipticSystem sys = ctx.cfg.resolve_system();
  const Verdict v = decide_decoupling(sys, decision_options(ctx, use_probe));
  ojson r;
  r["command"] = witness_only ? "witness" : "decouple";
  r["system"] = system_json(ctx, sys);
  ojson d = {{"verdict", to_string(v.decision)},
             {"tolerance", v.tol},
             {"probe_points", v.probe_points.size()},
             {"coefficients_from", use_probe ? "probe" : "direct evaluation"},
             {"ellipticity_lambda_min", v.ellipticity.lambda_min},
             {"remainder_max_abs_K", v.remainder_norm}};
  if (v.decision == Decision::PositiveDecoupled) {
    d["scalar_bound"] = v.scalar_bound;
    d["scalar_bound_ok"] = v.scalar_bound <= v.bound * (1.0 + 1e-12);
    d["scalar_lambda_min"] = v.scalar_lambda_min;
    d["criterion"] = "symmetrized coefficients are real diagonal; channel n evolves by c^(n)_kl = Re (C_kl)_nn";
    if (!witness_only) {
      CsvWriter csv(ctx.out_dir / "coefficients_n.csv");
      auto h = point_header(sys.dim());
      h.insert(h.end(), {"n", "k", "l", "c"});
      csv.row(h);
      for (const auto& s : v.samples)
        for (int n = 0; n < sys.m; ++n)
          for (int k = 0; k < sys.dim(); ++k)
            for (int l = 0; l < sys.dim(); ++l) {
              auto c = point_cells(s.x);
              c.insert(c.end(), {std::to_string(n + 1), std::to_string(k + 1), std::to_string(l + 1),
                                 num(s.c[static_cast<std::size_t>(n)](k, l))});
              csv.row(c);
            }
    }
  }
  if (v.witness) {
    d["witness"] = witness_json(*v.witness);
    d["criterion"] = "a(u+, u-) > 0 for u+ = phi (x) f, u- = psi (x) 1_B with disjoint channel supports";
    write_witness_csv(ctx, sys, *v.witness);
  } else if (witness_only) {
    d["witness"] = "none";
  }
  if (!v.diagnostics.empty()) d["diagnostics"] = v.diagnostics;
  r["decision"] = d;
  ctx.write_report(r);
  return kExitOk;
}

int cmd_witness_at(const Context& ctx) {
  const EllipticSystem sys = ctx.cfg.resolve_system();
  const int k = ctx.cfg.k - 1, l = ctx.cfg.l - 1;
  const Point& x = ctx.cfg.points.front();
  const CMatrix Q = symmetrized(sys, k, l, x).real().cast<cplx>();
  const Witness w = construct_witness(sys, x, k, l, Q, ctx.cfg.delta_max, ctx.cfg.tol);
  write_witness_csv(ctx, sys, w);
  ojson r;
  r["command"] = "witness";
  r["system"] = system_json(ctx, sys);
  r["witness"] = witness_json(w);
  ctx.write_report(r);
  return kExitOk;
}

int cmd_probe(const Context& ctx) {
  const EllipticSystem sys = ctx.cfg.resolve_system();
  Point x;
  if (ctx.cfg.points.empty())
    for (const auto& s : sys.box.sides) x.push_back(0.5 * (s.lo + s.hi));
  else
    x = ctx.cfg.points.front();
  ProbeOptions po;
  po.delta_max = ctx.cfg.delta_max;
  po.levels = ctx.cfg.levels;
  const int k = ctx.cfg.k - 1, l = ctx.cfg.l - 1;
  const ProbeResult pr = probe(sys, x, k, l, po);
  const CMatrix ref = symmetrized(sys, k, l, x);
  CsvWriter csv(ctx.out_dir / "probe.csv");
  csv.row({"level", "delta", "i", "j", "re", "im"});
  auto emit = [&](const std::string& level, double delta, const CMatrix& E) {
    for (int i = 0; i < E.rows(); ++i)
      for (int j = 0; j < E.cols(); ++j)
        csv.row({level, num(delta), std::to_string(i + 1), std::to_string(j + 1), num(E(i, j).real()),
                 num(E(i, j).imag())});
  };
  for (std::size_t j = 0; j < pr.deltas.size(); ++j) emit(std::to_string(j), pr.deltas[j], pr.estimates[j]);
  emit("final", 0.0, pr.estimate);
  ojson r;
  r["command"] = "probe";
  r["system"] = system_json(ctx, sys);
  r["probe"] = {{"x0", point_json(x)},
                {"index_pair", ojson::array({ctx.cfg.k, ctx.cfg.l})},
                {"estimate", matrix_json(pr.estimate)},
                {"extrapolated", pr.extrapolated},
                {"converged", pr.converged},
                {"delta_max", pr.deltas.front()},
                {"delta_min", pr.deltas.back()},
                {"reference_C_kl_plus_C_lk", matrix_json(ref)},
                {"max_error", (pr.estimate - ref).cwiseAbs().maxCoeff()}};
  ctx.write_report(r);
  return kExitOk;
}

ojson analyze_matrix(const CMatrix& Q, double tol) {
  if (tol <= 0.0) tol = default_mult_tol(Q);
  ojson j;
  j["tolerance"] = tol;
  j["offdiagonal_vanishes"] = offdiagonal_vanishes(Q, tol);
  j["commutes_with_indicators"] = commutes_with_indicators(Q, tol);
  j["dominated_on_basis"] = dominated_on_basis(Q, tol);
  j["is_multiplication"] = is_multiplication(Q, tol);
  j["operator_norm"] = operator_norm(Q);
  j["diag_projection_norm"] = operator_norm(diag_projection(Q));
  if (auto w = find_witness(Q, tol)) {
    std::vector<double> f(w->f.data(), w->f.data() + w->f.size());
    std::vector<int> B;
    for (int b : w->B) B.push_back(b + 1);
    j["witness"] = {{"f", f}, {"B", B}, {"pairing", complex_json(w->pairing)}};
  } else {
    j["witness"] = "none";
  }
  return j;
}

int cmd_analyze(const Context& ctx, const std::string& matrix_text) {
  ojson r;
  r["command"] = "analyze";
  if (!matrix_text.empty()) {
    nlohmann::json mj;
    try {
      mj = nlohmann::json::parse(matrix_text);
    } catch (const nlohmann::json::exception&) {
      throw ConfigError("--matrix: not a JSON array");
    }
    if (!mj.is_array() || mj.empty()) throw ConfigError("--matrix: expected a square array of rows");
    const auto m = static_cast<int>(mj.size());
    CMatrix Q(m, m);
    for (int i = 0; i < m; ++i) {
      if (!mj[static_cast<std::size_t>(i)].is_array() || static_cast<int>(mj[static_cast<std::size_t>(i)].size()) != m)
        throw ConfigError("--matrix: row " + std::to_string(i + 1) + " has the wrong length");
      for (int c = 0; c < m; ++c) {
        const auto& e = mj[static_cast<std::size_t>(i)][static_cast<std::size_t>(c)];
        if (e.is_number())
          Q(i, c) = e.get<double>();
        else if (e.is_array() && e.size() == 2)
          Q(i, c) = cplx(e[0].get<double>(), e[1].get<double>());
        else
          throw ConfigError("--matrix: entries must be numbers or [re, im] pairs");
      }
    }
    r["matrix"] = analyze_matrix(Q, ctx.cfg.tol);
    ctx.write_report(r);
    return kExitOk;
  }
  const EllipticSystem sys = ctx.cfg.resolve_system();
  r["system"] = system_json(ctx, sys);
  const std::vector<Point> pts = ctx.cfg.points.empty() ? default_probe_points(sys) : ctx.cfg.points;
  int failing = 0;
  ojson first;
  for (const auto& x : pts)
    for (int k = 0; k < sys.dim(); ++k)
      for (int l = k; l < sys.dim(); ++l) {
        const CMatrix Q = symmetrized(sys, k, l, x);
        const double tol = ctx.cfg.tol > 0 ? ctx.cfg.tol : default_mult_tol(Q);
        if (!is_multiplication(Q, tol)) {
          if (failing++ == 0)
            first = {{"x", point_json(x)}, {"index_pair", ojson::array({k + 1, l + 1})}, {"analysis", analyze_matrix(Q, tol)}};
        }
      }
  r["symmetrized"] = {{"points", pts.size()}, {"non_multiplication", failing}};
  if (failing) r["symmetrized"]["first_failure"] = first;
  const Grid grid = Grid::uniform(sys.box, ctx.cfg.grid, sys.bc);
  ojson lifts;
  for (int k = 0; k < sys.dim(); ++k)
    for (int l = 0; l < sys.dim(); ++l) {
      const MatrixField& f = sys.C(k, l);
      lifts["C" + std::to_string(k + 1) + std::to_string(l + 1)] =
          lift_is_diagonal(f, grid, ctx.cfg.tol > 0 ? ctx.cfg.tol : 1e-9 * (1.0 + f.bound()));
    }
  r["pointwise_multiplication_on_grid"] = lifts;
  ctx.write_report(r);
  return kExitOk;
}

int cmd_selftest_tents(const Context& ctx) {
  CsvWriter csv(ctx.out_dir / "tents.csv");
  csv.row({"d", "tau", "ktilde", "ltilde", "case", "k", "l", "G", "expected"});
  *ctx.out << "d,tau,ktilde,ltilde,case,k,l,G,expected\n";
  int failures = 0, pairs = 0;
  double worst = 0.0;
  for (int d = 1; d <= 4; ++d)
    for (double tau : {-3.0, -1.0, 0.0, 1.0, 2.0})
      for (int kt = 0; kt < d; ++kt)
        for (int lt = 0; lt < d; ++lt) {
          const TestPair p = build_test_pair(tau, kt, lt, d);
          const RMatrix expected = expected_interaction(tau, kt, lt, d);
          const double err = (p.interaction - expected).cwiseAbs().maxCoeff();
          worst = std::max(worst, err);
          ++pairs;
          if (err > 1e-12 * (1.0 + std::abs(tau))) ++failures;
          for (int k = 0; k < d; ++k)
            for (int l = 0; l < d; ++l) {
              const std::vector<std::string> row = {std::to_string(d),      num(tau),
                                                    std::to_string(kt + 1), std::to_string(lt + 1),
                                                    std::to_string(p.case_id), std::to_string(k + 1),
                                                    std::to_string(l + 1),  num(p.interaction(k, l)),
                                                    num(expected(k, l))};
              csv.row(row);
              for (std::size_t i = 0; i < row.size(); ++i) *ctx.out << (i ? "," : "") << row[i];
              *ctx.out << "\n";
            }
        }
  ojson r;
  r["command"] = "selftest-tents";
  r["tents"] = {{"pairs", pairs}, {"failures", failures}, {"max_deviation", worst},
                {"verdict", failures == 0 ? "PASS" : "FAIL"}};
  ctx.write_report(r);
  return failures == 0 ? kExitOk : kExitNumerical;
}

int cmd_catalog(const Context& ctx) {
  ojson r;
  r["command"] = "catalog";
  ojson entries = ojson::array();
  for (const auto& name : catalog_names()) {
    const std::string probe_name =
        name.find("<seed>") != std::string::npos ? name.substr(0, name.find('(')) + "(0)" : name;
    const CatalogEntry e = catalog_get(probe_name);
    entries.push_back({{"name", name}, {"expected", to_string(e.expected)}, {"default_bc", to_string(e.default_bc)},
                       {"summary", e.summary}});
  }
  *ctx.out << "name,expected,default_bc,summary\n";
  for (const auto& e : entries)
    *ctx.out << e["name"].get<std::string>() << "," << e["expected"].get<std::string>() << ","
             << e["default_bc"].get<std::string>() << ",\"" << e["summary"].get<std::string>() << "\"\n";
  std::ofstream(ctx.out_dir / "report.txt") << entries.dump(2) << "\n";
  if (ctx.json) std::ofstream(ctx.out_dir / "report.json") << entries.dump(2) << "\n";
  return kExitOk;
}

struct Flags {
  std::string config_path, catalog, bc, out, dump, matrix;
  std::vector<std::string> points;
  std::vector<double> times;
  int grid = 0, threads = 0, levels = 0, density = 0, k = 0, l = 0;
  double tol = 0.0, rel_tol = 0.0, delta_max = 0.0;
  std::uint64_t seed = 0;
  bool json = false, use_probe = false;
};

void add_common(CLI::App* sc, Flags& f) {
  sc->add_option("--config", f.config_path, "Config file (key = value lines)");
  sc->add_option("--catalog", f.catalog, "Catalog entry name");
  sc->add_option("--bc", f.bc, "Boundary condition override: dirichlet or free");
  sc->add_option("--grid", f.grid, "Cells per axis");
  sc->add_option("--out", f.out, std::string("Output directory (default $") + kOutputDirEnv + " or ./posilab-out)");
  sc->add_option("--threads", f.threads, "Worker thread cap");
  sc->add_option("--tol", f.tol, "Decision tolerance");
  sc->add_option("--seed", f.seed, "Random seed");
  sc->add_option("--point", f.points, "Point as comma-separated coordinates; repeatable");
  sc->add_flag("--json", f.json, "Also write report.json");
}

Point parse_point(const std::string& s) {
  Point p;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      p.push_back(std::stod(item, &used));
      if (used != item.size() && item.find_first_not_of(" ", used) != std::string::npos) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw ConfigError("--point: cannot parse '" + s + "'");
    }
  }
  if (p.empty()) throw ConfigError("--point: empty point");
  return p;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Positivity lab for elliptic systems with matrix coefficients", "posilab"};
  app.require_subcommand(1);
  Flags f;
  auto* c_ell = app.add_subcommand("check-elliptic", "Smallest Hermitian-part eigenvalue against mu");
  auto* c_asm = app.add_subcommand("assemble", "Assemble the Q1 stiffness and lumped mass");
  auto* c_pos = app.add_subcommand("positivity", "Scan exp(-tA) for negative entries");
  auto* c_dec = app.add_subcommand("decouple", "Decide positivity and extract scalar systems or a witness");
  auto* c_prb = app.add_subcommand("probe", "Recover C_kl + C_lk at a point from form values");
  auto* c_wit = app.add_subcommand("witness", "Construct a positivity witness");
  auto* c_ana = app.add_subcommand("analyze", "Multiplication-operator analysis");
  auto* c_tent = app.add_subcommand("selftest-tents", "Check the tent-pair interaction matrices for d <= 4");
  auto* c_cat = app.add_subcommand("catalog", "List catalog entries");
  for (auto* sc : {c_ell, c_asm, c_pos, c_dec, c_prb, c_wit, c_ana}) add_common(sc, f);
  for (auto* sc : {c_tent, c_cat}) {
    sc->add_option("--out", f.out, "Output directory");
    sc->add_flag("--json", f.json, "Also write report.json");
  }
  c_ell->add_option("--density", f.density, "Sample points per axis");
  c_asm->add_option("--dump-config", f.dump, "Write the system definition to this path ('-' for stdout)");
  c_pos->add_option("--times", f.times, "Times to test");
  c_pos->add_option("--rel-tol", f.rel_tol, "Tolerance relative to max |exp(-tA)|");
  for (auto* sc : {c_dec, c_wit}) sc->add_flag("--probe", f.use_probe, "Recover coefficients through the probe");
  for (auto* sc : {c_dec, c_prb, c_wit}) {
    sc->add_option("--delta-max", f.delta_max, "Largest probe scale");
    sc->add_option("--levels", f.levels, "Number of halvings in the delta schedule");
  }
  for (auto* sc : {c_prb, c_wit}) {
    sc->add_option("--k", f.k, "First index (1-based)");
    sc->add_option("--l", f.l, "Second index (1-based)");
  }
  c_ana->add_option("--matrix", f.matrix, "Analyze this matrix (JSON rows of numbers or [re, im] pairs)");

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e, out, err);
    return code == 0 ? kExitOk : kExitConfig;
  }

  try {
    Context ctx;
    ctx.out = &out;
    ctx.json = f.json;
    if (!f.config_path.empty()) ctx.cfg = load_config(f.config_path);
    RunConfig& cfg = ctx.cfg;
    if (!f.catalog.empty()) {
      cfg.catalog = f.catalog;
      cfg.system.reset();
    }
    if (!f.bc.empty()) cfg.bc = parse_bc(f.bc);
    if (f.grid) cfg.grid = f.grid;
    if (f.threads) cfg.threads = f.threads;
    if (f.tol) cfg.tol = f.tol;
    if (f.rel_tol) cfg.rel_tol = f.rel_tol;
    if (f.seed) cfg.seed = f.seed;
    if (f.delta_max) cfg.delta_max = f.delta_max;
    if (f.levels) cfg.levels = f.levels;
    if (f.density) cfg.density = f.density;
    if (f.k) cfg.k = f.k;
    if (f.l) cfg.l = f.l;
    if (!f.times.empty()) cfg.times = f.times;
    if (!f.points.empty()) {
      cfg.points.clear();
      for (const auto& p : f.points) cfg.points.push_back(parse_point(p));
    }
    std::string dir = f.out.empty() ? cfg.out_dir : f.out;
    if (dir.empty()) {
      const char* env = std::getenv(kOutputDirEnv);
      dir = env && *env ? env : "posilab-out";
    }
    ctx.out_dir = dir;
    fs::create_directories(ctx.out_dir);

    if (c_tent->parsed()) return cmd_selftest_tents(ctx);
    if (c_cat->parsed()) return cmd_catalog(ctx);
    if (!(c_ana->parsed() && !f.matrix.empty())) cfg.validate();
    if (cfg.system || cfg.catalog) {
      const EllipticSystem sys = cfg.resolve_system();
      for (const auto& p : cfg.points)
        if (static_cast<int>(p.size()) != sys.dim()) throw ConfigError("point " + format_point(p) + " has the wrong dimension");
      if (cfg.k < 1 || cfg.l < 1 || cfg.k > sys.dim() || cfg.l > sys.dim())
        throw ConfigError("index pair out of range 1.." + std::to_string(sys.dim()));
    }
    if (c_ell->parsed()) return cmd_check_elliptic(ctx);
    if (c_asm->parsed()) return cmd_assemble(ctx, f.dump);
    if (c_pos->parsed()) return cmd_positivity(ctx);
    if (c_dec->parsed()) return cmd_decouple(ctx, f.use_probe, false);
    if (c_prb->parsed()) return cmd_probe(ctx);
    if (c_wit->parsed()) {
      if (!cfg.points.empty() && !f.use_probe) return cmd_witness_at(ctx);
      return cmd_decouple(ctx, f.use_probe, true);
    }
    if (c_ana->parsed()) return cmd_analyze(ctx, f.matrix);
  } catch (const ConfigError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const ArgumentError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const GeometryError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const DomainError& e) {
    err << "config error: " << e.what() << "\n";
    return kExitConfig;
  } catch (const std::exception& e) {
    err << "numerical error: " << e.what() << "\n";
    return kExitNumerical;
  }
  return kExitOk;
}

}  // namespace posilab
