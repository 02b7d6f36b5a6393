#include "posilab/assembly.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <thread>

#include "posilab/parallel.hpp"

namespace posilab {

Grid::Grid(Box box, std::vector<int> cells, BoundaryCondition bc)
    : box_(std::move(box)), cells_(std::move(cells)), bc_(bc) {
  if (static_cast<int>(cells_.size()) != box_.dim()) throw ArgumentError("grid: cell counts must match the dimension");
  std::size_t total = 1;
  for (int n : cells_) {
    if (n < 1) throw ArgumentError("grid: need at least one cell per axis");
    total *= static_cast<std::size_t>(n + 1);
  }
  lattice_to_active_.assign(total, -1);
  std::vector<int> idx(cells_.size(), 0);
  for (std::size_t lin = 0; lin < total; ++lin) {
    std::size_t rem = lin;
    bool interior = true;
    for (std::size_t i = 0; i < cells_.size(); ++i) {
      idx[i] = static_cast<int>(rem % static_cast<std::size_t>(cells_[i] + 1));
      rem /= static_cast<std::size_t>(cells_[i] + 1);
      if (idx[i] == 0 || idx[i] == cells_[i]) interior = false;
    }
    if (bc_ == BoundaryCondition::Free || interior) {
      lattice_to_active_[lin] = static_cast<int>(active_to_lattice_.size());
      active_to_lattice_.push_back(static_cast<int>(lin));
    }
  }
}

Grid Grid::uniform(const Box& box, int n, BoundaryCondition bc) {
  return Grid(box, std::vector<int>(static_cast<std::size_t>(box.dim()), n), bc);
}

double Grid::spacing(int axis) const {
  return box_.sides[static_cast<std::size_t>(axis)].length() / cells_[static_cast<std::size_t>(axis)];
}

int Grid::cell_count() const {
  int c = 1;
  for (int n : cells_) c *= n;
  return c;
}

int Grid::active_index(const std::vector<int>& lattice) const {
  std::size_t lin = 0;
  std::size_t stride = 1;
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    if (lattice[i] < 0 || lattice[i] > cells_[i]) return -1;
    lin += static_cast<std::size_t>(lattice[i]) * stride;
    stride *= static_cast<std::size_t>(cells_[i] + 1);
  }
  return lattice_to_active_[lin];
}

std::vector<int> Grid::lattice_of(int node) const {
  auto lin = static_cast<std::size_t>(active_to_lattice_.at(static_cast<std::size_t>(node)));
  std::vector<int> idx(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    idx[i] = static_cast<int>(lin % static_cast<std::size_t>(cells_[i] + 1));
    lin /= static_cast<std::size_t>(cells_[i] + 1);
  }
  return idx;
}

Point Grid::node_coordinates(int node) const {
  const auto idx = lattice_of(node);
  Point x(idx.size());
  for (std::size_t i = 0; i < idx.size(); ++i) x[i] = box_.sides[i].lo + idx[i] * spacing(static_cast<int>(i));
  return x;
}

double Grid::node_weight(int node) const {
  const auto idx = lattice_of(node);
  double w = 1.0;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    w *= spacing(static_cast<int>(i));
    if (idx[i] == 0 || idx[i] == cells_[i]) w *= 0.5;
  }
  return w;
}

std::vector<int> Grid::cell_lattice(int cell) const {
  std::vector<int> idx(cells_.size());
  for (std::size_t i = 0; i < cells_.size(); ++i) {
    idx[i] = cell % cells_[i];
    cell /= cells_[i];
  }
  return idx;
}

Box Grid::cell_box(int cell) const {
  const auto idx = cell_lattice(cell);
  std::vector<Interval> sides;
  for (std::size_t i = 0; i < idx.size(); ++i) {
    const double h = spacing(static_cast<int>(i));
    sides.push_back({box_.sides[i].lo + idx[i] * h, box_.sides[i].lo + (idx[i] + 1) * h});
  }
  return Box(std::move(sides));
}

std::vector<Point> Grid::cell_centers() const {
  std::vector<Point> out;
  for (int c = 0; c < cell_count(); ++c) {
    Box b = cell_box(c);
    Point x;
    for (const auto& s : b.sides) x.push_back(0.5 * (s.lo + s.hi));
    out.push_back(std::move(x));
  }
  return out;
}

TensorTestFunction Grid::basis_function(int node) const {
  TensorTestFunction f = TensorTestFunction::product(1.0, std::vector<Piecewise1D>(cells_.size(), hat()));
  f.center = node_coordinates(node);
  for (int i = 0; i < dim(); ++i) f.dilation[static_cast<std::size_t>(i)] = spacing(i);
  return f;
}

CMatrix DiscreteForm::channel_block(int i, int j) const {
  const int N = grid.node_count();
  CMatrix B = CMatrix::Zero(N, N);
  for (int r = 0; r < K.outerSize(); ++r)
    for (SparseC::InnerIterator it(K, r); it; ++it)
      if (it.row() % m == i && it.col() % m == j) B(it.row() / m, it.col() / m) = it.value();
  return B;
}

namespace {

// table(e, a, da, b, db) = int_cell x^e N_a^{(da)} N_b^{(db)} for the 1D cell [x0, x0 + h].
struct CellTable1D {
  int max_e = 0;
  std::vector<double> v;
  double operator()(int e, int a, int da, int b, int db) const {
    return v[static_cast<std::size_t>((((e * 2 + a) * 2 + da) * 2 + b) * 2 + db)];
  }
};

CellTable1D cell_table(double x0, double h, int max_e, int order) {
  if (max_e + 2 > 2 * order - 1)
    throw CapacityError("assembly: coefficient degree " + std::to_string(max_e) + " exceeds quadrature capacity");
  CellTable1D t;
  t.max_e = max_e;
  t.v.resize(static_cast<std::size_t>((max_e + 1) * 16));
  auto shape = [&](int a, int da, double x) {
    if (da) return a ? 1.0 / h : -1.0 / h;
    return a ? (x - x0) / h : (x0 + h - x) / h;
  };
  for (int e = 0; e <= max_e; ++e)
    for (int a = 0; a < 2; ++a)
      for (int da = 0; da < 2; ++da)
        for (int b = 0; b < 2; ++b)
          for (int db = 0; db < 2; ++db) {
            auto f = [&](double x) { return std::pow(x, e) * shape(a, da, x) * shape(b, db, x); };
            t.v[static_cast<std::size_t>((((e * 2 + a) * 2 + da) * 2 + b) * 2 + db)] =
                gauss_legendre(f, x0, x0 + h, order);
          }
  return t;
}

bool field_is_zero(const MatrixField& f) {
  if (f.kind() == FieldKind::GridSampled)
    return std::all_of(f.cell_values().begin(), f.cell_values().end(),
                       [](const CMatrix& c) { return c.cwiseAbs().maxCoeff() == 0.0; });
  return std::all_of(f.terms().begin(), f.terms().end(),
                     [](const MatrixTerm& t) { return t.coef.cwiseAbs().maxCoeff() == 0.0; });
}

}  // namespace

DiscreteForm assemble(const EllipticSystem& sys, const Grid& grid, const AssemblyOptions& opts) {
  sys.validate();
  if (!(grid.box() == sys.box)) throw ArgumentError("assemble: grid box differs from the system box");
  const int d = sys.dim();
  const int m = sys.m;
  const int order = supported_gauss_order(opts.gauss_order);
  const int nloc = 1 << d;

  int max_e = 0;
  for (const auto& f : sys.coeffs)
    if (f.kind() != FieldKind::GridSampled)
      for (const auto& t : f.terms())
        for (int e : t.exps) max_e = std::max(max_e, e);

  std::vector<std::vector<CellTable1D>> tables(static_cast<std::size_t>(d));
  for (int i = 0; i < d; ++i) {
    const double h = grid.spacing(i);
    const double lo = grid.box().sides[static_cast<std::size_t>(i)].lo;
    for (int c = 0; c < grid.cells()[static_cast<std::size_t>(i)]; ++c)
      tables[static_cast<std::size_t>(i)].push_back(cell_table(lo + c * h, h, max_e, order));
  }

  std::vector<std::pair<int, int>> active_pairs;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      if (!field_is_zero(sys.C(k, l))) active_pairs.emplace_back(k, l);

  using Trip = Eigen::Triplet<cplx>;
  const int ncells = grid.cell_count();

  auto cell_work = [&](int cell, std::vector<Trip>& out) {
    const auto cl = grid.cell_lattice(cell);
    std::vector<int> dofs(static_cast<std::size_t>(nloc));
    for (int P = 0; P < nloc; ++P) {
      std::vector<int> lat = cl;
      for (int i = 0; i < d; ++i) lat[static_cast<std::size_t>(i)] += (P >> i) & 1;
      dofs[static_cast<std::size_t>(P)] = grid.active_index(lat);
    }
    if (std::all_of(dofs.begin(), dofs.end(), [](int v) { return v < 0; })) return;

    CMatrix local = CMatrix::Zero(nloc * m, nloc * m);
    Point centre;
    for (const auto& s : grid.cell_box(cell).sides) centre.push_back(0.5 * (s.lo + s.hi));

    auto accumulate = [&](int k, int l, const std::vector<int>* exps, const CMatrix& coef) {
      for (int P = 0; P < nloc; ++P)
        for (int Q = 0; Q < nloc; ++Q) {
          double g = 1.0;
          for (int i = 0; i < d && g != 0.0; ++i) {
            const auto ui = static_cast<std::size_t>(i);
            const int e = exps ? (*exps)[ui] : 0;
            g *= tables[ui][static_cast<std::size_t>(cl[ui])](e, (Q >> i) & 1, l == i, (P >> i) & 1, k == i);
          }
          if (g != 0.0) local.block(P * m, Q * m, m, m) += g * coef;
        }
    };
    for (const auto& [k, l] : active_pairs) {
      const MatrixField& f = sys.C(k, l);
      if (f.kind() == FieldKind::GridSampled) {
        accumulate(k, l, nullptr, f.eval(centre));
      } else {
        for (const auto& t : f.terms())
          if (t.coef.cwiseAbs().maxCoeff() != 0.0) accumulate(k, l, &t.exps, t.coef);
      }
    }
    for (int P = 0; P < nloc; ++P) {
      const int p = dofs[static_cast<std::size_t>(P)];
      if (p < 0) continue;
      for (int Q = 0; Q < nloc; ++Q) {
        const int q = dofs[static_cast<std::size_t>(Q)];
        if (q < 0) continue;
        for (int i = 0; i < m; ++i)
          for (int j = 0; j < m; ++j) {
            const cplx v = local(P * m + i, Q * m + j);
            if (v != cplx(0.0)) out.emplace_back(p * m + i, q * m + j, v);
          }
      }
    }
  };

  auto chunks = parallel_map_chunks(ncells, opts.threads, [&](int begin, int end) {
    std::vector<Trip> trips;
    for (int c = begin; c < end; ++c) cell_work(c, trips);
    return trips;
  });
  std::vector<Trip> all;
  for (auto& ch : chunks) all.insert(all.end(), ch.begin(), ch.end());

  DiscreteForm form;
  form.grid = grid;
  form.m = m;
  form.K.resize(form.size(), form.size());
  form.K.setFromTriplets(all.begin(), all.end());
  form.K.makeCompressed();
  form.mass.resize(grid.node_count());
  for (int p = 0; p < grid.node_count(); ++p) form.mass(p) = grid.node_weight(p);
  return form;
}

cplx form_value(const EllipticSystem& sys, const TensorTestFunction& phi, const CVector& f,
                const TensorTestFunction& psi, const CVector& g, int gauss_order) {
  sys.validate();
  const int d = sys.dim();
  if (phi.dim() != d || psi.dim() != d) throw ArgumentError("form_value: test function dimension mismatch");
  if (f.size() != sys.m || g.size() != sys.m) throw ArgumentError("form_value: channel vector size mismatch");
  if (phi.is_zero() || psi.is_zero() || f.isZero(0.0) || g.isZero(0.0)) return 0.0;

  const Box sphi = phi.support();
  const Box spsi = psi.support();
  auto overlaps = [&](const Box& cell) {
    for (int i = 0; i < d; ++i) {
      const auto ui = static_cast<std::size_t>(i);
      const double lo = std::max({cell.sides[ui].lo, sphi.sides[ui].lo, spsi.sides[ui].lo});
      const double hi = std::min({cell.sides[ui].hi, sphi.sides[ui].hi, spsi.sides[ui].hi});
      if (!(hi > lo)) return false;
    }
    return true;
  };

  cplx total = 0.0;
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      const MatrixField& C = sys.C(k, l);
      const IntegrandFactor fac[2] = {{&phi, l}, {&psi, k}};
      if (C.kind() == FieldKind::GridSampled) {
        for (int c = 0; c < C.cell_count(); ++c) {
          const Box cell = C.cell_box(c);
          if (!overlaps(cell)) continue;
          const cplx pairing = g.dot(C.cell_values()[static_cast<std::size_t>(c)] * f);
          if (pairing == cplx(0.0)) continue;
          const Polynomial p{{std::vector<int>(static_cast<std::size_t>(d), 0), pairing}};
          total += exact_integral(fac, p, &cell, gauss_order);
        }
      } else {
        Polynomial p;
        for (const auto& t : C.terms()) {
          const cplx pairing = g.dot(t.coef * f);  // (C f, g) = g^H C f
          if (pairing != cplx(0.0)) p.push_back({t.exps, pairing});
        }
        if (!p.empty()) total += exact_integral(fac, p, &sys.box, gauss_order);
      }
    }
  return total;
}

double commutation_residual(const Grid& grid, const OperatorMatrix& B, const CVector& u, const CVector& v, int k,
                            int l) {
  if (grid.bc() != BoundaryCondition::Dirichlet)
    throw ContractError("commutation identity holds on H^1_0 only; use a Dirichlet grid");
  const int m = static_cast<int>(B.rows());
  const MatrixField field = MatrixField::constant(grid.box(), B);
  const auto K1 = assemble(EllipticSystem::single(grid.box(), m, k, l, field, grid.bc()), grid).K;
  const auto K2 = assemble(EllipticSystem::single(grid.box(), m, l, k, field, grid.bc()), grid).K;
  if (u.size() != K1.cols() || v.size() != K1.rows()) throw ArgumentError("commutation_residual: state size mismatch");
  return std::abs(v.dot(K1 * u) - v.dot(K2 * u));
}

CVector interpolate(const Grid& grid, const TensorTestFunction& phi, const CVector& f) {
  const auto m = f.size();
  CVector out(grid.node_count() * m);
  for (int p = 0; p < grid.node_count(); ++p) out.segment(p * m, m) = phi(grid.node_coordinates(p)) * f;
  return out;
}

double imaginary_norm(const SparseC& K) {
  double v = 0.0;
  for (int r = 0; r < K.outerSize(); ++r)
    for (SparseC::InnerIterator it(K, r); it; ++it) v = std::max(v, std::abs(it.value().imag()));
  return v;
}

double max_abs(const SparseC& K) {
  double v = 0.0;
  for (int r = 0; r < K.outerSize(); ++r)
    for (SparseC::InnerIterator it(K, r); it; ++it) v = std::max(v, std::abs(it.value()));
  return v;
}

void write_matrix_market(std::ostream& os, const SparseC& K) {
  os << "%%MatrixMarket matrix coordinate complex general\n";
  os << K.rows() << ' ' << K.cols() << ' ' << K.nonZeros() << '\n';
  char buf[128];
  for (int r = 0; r < K.outerSize(); ++r)
    for (SparseC::InnerIterator it(K, r); it; ++it) {
      std::snprintf(buf, sizeof buf, "%lld %lld %.17g %.17g\n", static_cast<long long>(it.row() + 1),
                    static_cast<long long>(it.col() + 1), it.value().real(), it.value().imag());
      os << buf;
    }
}

SparseC read_matrix_market(std::istream& is) {
  std::string line;
  if (!std::getline(is, line) || line.rfind("%%MatrixMarket", 0) != 0)
    throw ConfigError("matrix market: missing header line");
  while (std::getline(is, line) && !line.empty() && line[0] == '%') {
  }
  std::istringstream head(line);
  long long rows = 0, cols = 0, nnz = 0;
  if (!(head >> rows >> cols >> nnz)) throw ConfigError("matrix market: malformed size line");
  std::vector<Eigen::Triplet<cplx>> trips;
  for (long long n = 0; n < nnz; ++n) {
    long long r = 0, c = 0;
    double re = 0, im = 0;
    if (!(is >> r >> c >> re >> im)) throw ConfigError("matrix market: truncated entry list");
    trips.emplace_back(static_cast<int>(r - 1), static_cast<int>(c - 1), cplx(re, im));
  }
  SparseC K(rows, cols);
  K.setFromTriplets(trips.begin(), trips.end());
  return K;
}

}  // namespace posilab
