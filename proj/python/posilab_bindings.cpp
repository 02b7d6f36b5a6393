#include <sstream>

#include <pybind11/complex.h>
#include <pybind11/eigen.h>
#include <pybind11/pybind11.h>
#include <pybind11/stl.h>

#include "posilab/catalog.hpp"
#include "posilab/cli.hpp"
#include "posilab/lab.hpp"
#include "posilab/semigroup.hpp"

namespace py = pybind11;
using namespace posilab;

namespace {

BoundaryCondition bc_or(const std::optional<std::string>& bc, BoundaryCondition fallback) {
  return bc ? parse_bc(*bc) : fallback;
}

py::dict witness_dict(const Witness& w) {
  py::dict d;
  d["kind"] = w.kind;
  d["source"] = w.source;
  d["x0"] = w.x0;
  d["k"] = w.ktilde + 1;
  d["l"] = w.ltilde + 1;
  d["delta"] = w.delta;
  d["f"] = CVector(w.f);
  d["g"] = CVector(w.g);
  d["value"] = w.value;
  d["bound"] = w.bound;
  d["steps"] = w.steps;
  return d;
}

py::dict verdict_dict(const Verdict& v) {
  py::dict d;
  d["decision"] = to_string(v.decision);
  d["tol"] = v.tol;
  d["bound"] = v.bound;
  d["ellipticity_lambda_min"] = v.ellipticity.lambda_min;
  d["remainder_norm"] = v.remainder_norm;
  d["remainder_threshold"] = v.remainder_threshold;
  d["probe_points"] = v.probe_points;
  d["diagnostics"] = v.diagnostics;
  if (v.decision == Decision::PositiveDecoupled) {
    d["scalar_bound"] = v.scalar_bound;
    d["scalar_lambda_min"] = v.scalar_lambda_min;
    py::list samples;
    for (const auto& s : v.samples) {
      py::dict e;
      e["x"] = s.x;
      e["c"] = s.c;
      e["lambda_min"] = s.lambda_min;
      samples.append(e);
    }
    d["samples"] = samples;
  }
  d["witness"] = v.witness ? py::object(witness_dict(*v.witness)) : py::none();
  return d;
}

EllipticSystem constant_system(const std::vector<std::pair<double, double>>& box, const std::vector<CMatrix>& coeffs,
                               const std::string& bc, double mu) {
  std::vector<Interval> sides;
  for (const auto& [lo, hi] : box) sides.push_back({lo, hi});
  EllipticSystem s;
  s.box = Box(sides);
  const auto d = static_cast<std::size_t>(s.box.dim());
  if (coeffs.size() != d * d) throw ArgumentError("constant_system: need d*d coefficient matrices");
  s.m = static_cast<int>(coeffs.front().rows());
  for (const auto& c : coeffs) s.coeffs.push_back(MatrixField::constant(s.box, c));
  s.bc = parse_bc(bc);
  s.mu = mu;
  s.validate();
  return s;
}

}  // namespace

PYBIND11_MODULE(_core, m) {
  m.doc() = "Positivity lab for semigroups of elliptic systems with matrix coefficients.";

  auto base = py::register_exception<Error>(m, "Error", PyExc_RuntimeError);
  py::register_exception<ConfigError>(m, "ConfigError", base);
  py::register_exception<DomainError>(m, "DomainError", base);
  py::register_exception<ArgumentError>(m, "ArgumentError", base);
  py::register_exception<GeometryError>(m, "GeometryError", base);
  py::register_exception<ContractError>(m, "ContractError", base);
  py::register_exception<NumericalError>(m, "NumericalError", base);
  py::register_exception<CapacityError>(m, "CapacityError", base);

  py::class_<EllipticSystem>(m, "EllipticSystem")
      .def_property_readonly("dim", &EllipticSystem::dim)
      .def_readonly("channels", &EllipticSystem::m)
      .def_readonly("mu", &EllipticSystem::mu)
      .def_property_readonly("bc", [](const EllipticSystem& s) { return to_string(s.bc); })
      .def_property_readonly("box", [](const EllipticSystem& s) {
        std::vector<std::pair<double, double>> out;
        for (const auto& i : s.box.sides) out.emplace_back(i.lo, i.hi);
        return out;
      })
      .def("bound", &EllipticSystem::bound)
      .def("coefficient", [](const EllipticSystem& s, int k, int l, const Point& x) {
        return s.C(k - 1, l - 1).eval(x);
      }, py::arg("k"), py::arg("l"), py::arg("x"))
      .def("block_matrix", &EllipticSystem::block_matrix)
      .def("__repr__", [](const EllipticSystem& s) {
        std::ostringstream os;
        os << "<EllipticSystem d=" << s.dim() << " m=" << s.m << " bc=" << to_string(s.bc) << ">";
        return os.str();
      });

  m.def("catalog_names", &catalog_names);
  m.def("catalog", [](const std::string& name, const std::optional<std::string>& bc) {
    const CatalogEntry e = catalog_get(name);
    return e.make(bc_or(bc, e.default_bc));
  }, py::arg("name"), py::arg("bc") = py::none());
  m.def("catalog_expectation", [](const std::string& name) { return to_string(catalog_get(name).expected); });
  m.def("constant_system", &constant_system, py::arg("box"), py::arg("coefficients"), py::arg("bc") = "dirichlet",
        py::arg("mu") = 1.0, "Constant coefficients given row-major as d*d matrices (C_11, C_12, ...).");
  m.def("check_transform", py::overload_cast<const EllipticSystem&>(&check_transform));

  m.def("ellipticity", [](const EllipticSystem& s, int density) {
    const auto r = check_ellipticity(s, {}, density);
    py::dict d;
    d["lambda_min"] = r.lambda_min;
    d["argmin"] = r.argmin;
    d["pass"] = r.pass;
    return d;
  }, py::arg("system"), py::arg("density") = 6);

  m.def("decide", [](const EllipticSystem& s, bool use_probe, double tol) {
    DecisionOptions o;
    o.use_probe = use_probe;
    o.tol = tol;
    return verdict_dict(decide_decoupling(s, o));
  }, py::arg("system"), py::arg("use_probe") = false, py::arg("tol") = 0.0,
     "Decision with scalar coefficient samples or a witness. Indices in the result are 1-based.");

  m.def("probe", [](const EllipticSystem& s, const Point& x0, int k, int l, double delta_max, int levels) {
    ProbeOptions o;
    o.delta_max = delta_max;
    o.levels = levels;
    const ProbeResult r = probe(s, x0, k - 1, l - 1, o);
    py::dict d;
    d["estimate"] = r.estimate;
    d["deltas"] = r.deltas;
    d["estimates"] = r.estimates;
    d["converged"] = r.converged;
    return d;
  }, py::arg("system"), py::arg("x0"), py::arg("k"), py::arg("l"), py::arg("delta_max") = 0.0, py::arg("levels") = 7);

  m.def("symmetrized", [](const EllipticSystem& s, int k, int l, const Point& x) {
    return symmetrized(s, k - 1, l - 1, x);
  });

  m.def("assemble", [](const EllipticSystem& s, int cells, const std::optional<std::string>& bc, int threads) {
    const Grid grid = Grid::uniform(s.box, cells, bc_or(bc, s.bc));
    DiscreteForm f;
    {
      py::gil_scoped_release release;
      f = assemble(s, grid, {threads});
    }
    return py::make_tuple(f.K, f.mass);
  }, py::arg("system"), py::arg("cells"), py::arg("bc") = py::none(), py::arg("threads") = 1,
     "Stiffness (scipy CSR, node-major channel-minor) and lumped mass per node.");

  m.def("positivity", [](const EllipticSystem& s, int cells, std::optional<std::vector<double>> times, double rel_tol) {
    const Grid grid = Grid::uniform(s.box, cells, s.bc);
    const auto G = GeneratorOperator::from_form(assemble(s, grid));
    const PositivityReport r = positivity_scan(G, times ? *times : default_times(G), {rel_tol, 1});
    py::dict d;
    d["verdict"] = to_string(r.verdict);
    d["min_entry"] = r.min_entry;
    d["max_positive_offdiag"] = r.max_positive_offdiag;
    d["max_imag"] = r.max_imag;
    py::list rows;
    for (const auto& row : r.rows) rows.append(py::dict(py::arg("t") = row.t, py::arg("min_entry") = row.min_entry,
                                                        py::arg("scale") = row.scale, py::arg("negatives") = row.negatives));
    d["rows"] = rows;
    return d;
  }, py::arg("system"), py::arg("cells") = 8, py::arg("times") = py::none(), py::arg("rel_tol") = 1e-9);

  m.def("expm", [](const CMatrix& A, double t) { return expm_dense(GeneratorOperator::from_dense(A), t); },
        py::arg("A"), py::arg("t"), "exp(-tA) for a dense generator.");

  m.def("is_multiplication", [](const CMatrix& Q) { return is_multiplication(Q, default_mult_tol(Q)); });
  m.def("find_witness", [](const CMatrix& Q) -> py::object {
    const auto w = find_witness(Q, default_mult_tol(Q));
    if (!w) return py::none();
    std::vector<int> B;
    for (int b : w->B) B.push_back(b + 1);
    return py::dict(py::arg("f") = RVector(w->f), py::arg("B") = B, py::arg("pairing") = w->pairing);
  });
  m.def("diag_projection", &diag_projection);

  m.def("tent_pair_interaction", [](double tau, int k, int l, int d) {
    const TestPair p = build_test_pair(tau, k - 1, l - 1, d);
    return py::make_tuple(p.case_id, interaction_matrix(p.phi, p.psi));
  }, py::arg("tau"), py::arg("k"), py::arg("l"), py::arg("d"));

  m.def("run_cli", [](const std::vector<std::string>& args) {
    std::ostringstream out, err;
    const int code = run_cli(args, out, err);
    return py::make_tuple(code, out.str(), err.str());
  }, py::arg("args"), "Runs one CLI subcommand; returns (exit code, stdout, stderr).");
}
