#include "doctest.h"

#include <sstream>

#include "posilab/assembly.hpp"
#include "posilab/catalog.hpp"
#include "support/generators.hpp"

using namespace posilab;

namespace {

EllipticSystem laplacian(const Box& box, int m, const CMatrix& scale, BoundaryCondition bc) {
  EllipticSystem s;
  s.box = box;
  s.m = m;
  s.bc = bc;
  const int d = box.dim();
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l)
      s.coeffs.push_back(MatrixField::constant(box, k == l ? scale : CMatrix::Zero(m, m)));
  return s;
}

// sum_k Re(u^H K_k u) with K_k the channelwise Laplacian part d_k d_k.
double gradient_energy(const Grid& grid, int m, const CVector& u) {
  const CMatrix I = CMatrix::Identity(m, m);
  const auto K = assemble(laplacian(grid.box(), m, I, grid.bc()), grid).K;
  return u.dot(K * u).real();
}

}  // namespace

TEST_CASE("one-dimensional single interior node") {
  const Box box = Box::cube(1, 0, 1);
  const EllipticSystem s = laplacian(box, 1, CMatrix::Identity(1, 1), BoundaryCondition::Dirichlet);
  const Grid grid = Grid::uniform(box, 2, BoundaryCondition::Dirichlet);
  const DiscreteForm f = assemble(s, grid);
  REQUIRE(f.size() == 1);
  CHECK(CMatrix(f.K)(0, 0).real() == doctest::Approx(4.0).epsilon(1e-15));
  // Oracle: int (b')^2 with b the nodal hat of width h = 1/2.
  const TensorTestFunction b = grid.basis_function(0);
  const IntegrandFactor fac[2] = {{&b, 0}, {&b, 0}};
  CHECK(exact_integral(fac) == doctest::Approx(4.0).epsilon(1e-15));
  CHECK(f.mass(0) == doctest::Approx(0.5));
}

TEST_CASE("node counts and weights") {
  const Box box({{0, 1}, {0, 2}});
  const Grid d(box, {4, 3}, BoundaryCondition::Dirichlet);
  const Grid fr(box, {4, 3}, BoundaryCondition::Free);
  CHECK(d.node_count() == 3 * 2);
  CHECK(fr.node_count() == 5 * 4);
  double total = 0.0;
  for (int p = 0; p < fr.node_count(); ++p) total += fr.node_weight(p);
  CHECK(total == doctest::Approx(box.volume()));
  CHECK(d.node_weight(0) == doctest::Approx(0.25 * 2.0 / 3.0));
}

TEST_CASE("stiffness entries equal exact form values on basis pairs") {
  testgen::Gen g(41);
  for (int trial = 0; trial < 4; ++trial) {
    const int d = 2 + trial % 2;
    const int m = 1 + trial % 2;
    const Box box = Box::cube(d, -1, 1);
    const auto bc = trial < 2 ? BoundaryCondition::Free : BoundaryCondition::Dirichlet;
    EllipticSystem s = g.polynomial_system(box, m, bc, 3);
    if (trial == 3) s.C(0, 1) = g.grid_field(box, m, std::vector<int>(static_cast<std::size_t>(d), 3));
    const Grid grid = Grid::uniform(box, 3, bc);
    const DiscreteForm f = assemble(s, grid);
    const CMatrix K(f.K);
    for (int s0 = 0; s0 < 40; ++s0) {
      const int p = g.integer(0, grid.node_count() - 1);
      const int q = g.integer(0, grid.node_count() - 1);
      const int i = g.integer(0, m - 1), j = g.integer(0, m - 1);
      const cplx oracle = form_value(s, grid.basis_function(q), CVector::Unit(m, j), grid.basis_function(p),
                                     CVector::Unit(m, i));
      CHECK(std::abs(K(f.index(p, i), f.index(q, j)) - oracle) <= 1e-12 * (1.0 + std::abs(oracle)));
    }
  }
}

TEST_CASE("diagonal coefficients never couple channels") {
  testgen::Gen g(42);
  const Box box = Box::cube(2, 0, 1);
  EllipticSystem s = laplacian(box, 3, g.diagonal_matrix(3), BoundaryCondition::Free);
  s.C(0, 1) = MatrixField::constant(box, g.diagonal_matrix(3));
  const DiscreteForm f = assemble(s, Grid::uniform(box, 5, BoundaryCondition::Free));
  for (int r = 0; r < f.K.outerSize(); ++r)
    for (SparseC::InnerIterator it(f.K, r); it; ++it) CHECK(it.row() % 3 == it.col() % 3);
}

TEST_CASE("the null form assembles to zero on H^1") {
  const EllipticSystem s = catalog_get("ex3_5_nullform").make(BoundaryCondition::Free);
  for (int n : {2, 4, 5}) {
    const DiscreteForm f = assemble(s, Grid::uniform(s.box, n, BoundaryCondition::Free));
    CHECK(max_abs(f.K) <= 1e-10);
  }
}

TEST_CASE("stiffness sparsity bound") {
  const EllipticSystem s = catalog_get("ex5_5").make();
  const DiscreteForm f = assemble(s, Grid::uniform(s.box, 4, BoundaryCondition::Free));
  for (int r = 0; r < f.K.outerSize(); ++r) CHECK(f.K.innerVector(r).nonZeros() <= 27 * 2 * 2);
}

TEST_CASE("form value examples") {
  const EllipticSystem e = catalog_get("ex1_3").make();
  const TestPair p = build_test_pair(1.0, 0, 1, 2);
  const cplx v = form_value(e, p.phi, CVector::Unit(2, 0), p.psi, CVector::Unit(2, 1));
  CHECK(std::abs(v) <= 1e-14);

  // 2 (int eta'^2)(int eta^2) = 2 * 2 * 2/3
  const EllipticSystem h = laplacian(Box::cube(2, -1, 1), 1, CMatrix::Identity(1, 1), BoundaryCondition::Dirichlet);
  const auto eta2 = TensorTestFunction::product(1.0, {hat(), hat()});
  const cplx e2 = form_value(h, eta2, CVector::Ones(1), eta2, CVector::Ones(1));
  CHECK(e2.real() == doctest::Approx(8.0 / 3.0).epsilon(1e-15));

  CHECK(form_value(e, p.phi, CVector::Zero(2), p.psi, CVector::Unit(2, 1)) == cplx(0.0));
}

TEST_CASE("commutation residual") {
  testgen::Gen g(43);
  const Box box = Box::cube(2, 0, 1);
  const Grid grid = Grid::uniform(box, 8, BoundaryCondition::Dirichlet);
  const CMatrix I = CMatrix::Identity(2, 2);
  for (int trial = 0; trial < 5; ++trial) {
    const CVector u = g.complex_vector(grid.node_count() * 2);
    const CVector v = g.complex_vector(grid.node_count() * 2);
    const CMatrix B = trial == 0 ? I : g.complex_matrix(2);
    CHECK(commutation_residual(grid, B, u, v, 0, 1) <= 1e-10 * B.norm() * u.norm() * v.norm());
    CHECK(commutation_residual(grid, B, u, v, 1, 1) == 0.0);
  }
  const CVector u = g.complex_vector(grid.node_count() * 2);
  CHECK(commutation_residual(grid, I, u, u, 0, 1) <= 1e-12 * u.squaredNorm());
  CHECK_THROWS_AS(commutation_residual(Grid::uniform(box, 4, BoundaryCondition::Free), I,
                                       CVector::Zero(50), CVector::Zero(50), 0, 1),
                  ContractError);
}

TEST_CASE("gauge invariance on Dirichlet grids") {
  testgen::Gen g(44);
  for (int trial = 0; trial < 6; ++trial) {
    const Box box = Box::cube(2, -1, 1);
    const EllipticSystem s = g.polynomial_system(box, 2, BoundaryCondition::Dirichlet);
    const cplx c = g.complex_value(3.0);
    EllipticSystem t = s;
    t.C(0, 1) = t.C(0, 1).plus_constant(c * CMatrix::Identity(2, 2));
    t.C(1, 0) = t.C(1, 0).plus_constant(-c * CMatrix::Identity(2, 2));
    const Grid grid = Grid::uniform(box, 6, BoundaryCondition::Dirichlet);
    const SparseC a = assemble(s, grid).K;
    const SparseC b = assemble(t, grid).K;
    CHECK(max_abs(a - b) <= 1e-10 * max_abs(a));
    // With Free boundary the same change is visible.
    const Grid free = Grid::uniform(box, 6, BoundaryCondition::Free);
    CHECK(max_abs(assemble(s, free).K - assemble(t, free).K) > 1e-3);
  }
}

TEST_CASE("constant coefficients enter only through the symmetrized part on Dirichlet grids") {
  testgen::Gen g(45);
  for (int trial = 0; trial < 6; ++trial) {
    const int d = 2 + trial % 2;
    const Box box = Box::cube(d, 0, 1);
    const EllipticSystem s = g.constant_system(box, 2, BoundaryCondition::Dirichlet);
    EllipticSystem h = s;
    for (int k = 0; k < d; ++k)
      for (int l = 0; l < d; ++l) h.C(k, l) = MatrixField::constant(box, 0.5 * symmetrized(s, k, l, Point(d, 0.5)));
    const Grid grid = Grid::uniform(box, 4, BoundaryCondition::Dirichlet);
    const SparseC a = assemble(s, grid).K;
    CHECK(max_abs(a - assemble(h, grid).K) <= 1e-10 * max_abs(a));
  }
}

TEST_CASE("discrete ellipticity inherits the pointwise bound") {
  testgen::Gen g(46);
  for (int trial = 0; trial < 6; ++trial) {
    const Box box = Box::cube(2, -1, 1);
    const EllipticSystem s = g.polynomial_system(box, 2, BoundaryCondition::Dirichlet);
    const double mu = check_ellipticity(s, {}, 9).lambda_min;
    // Exact quadrature of a pointwise inequality: no discretization gap for
    // constant-in-cell gradients beyond sampling of the coefficient bound.
    const Grid grid = Grid::uniform(box, 6, BoundaryCondition::Dirichlet);
    const auto K = assemble(s, grid).K;
    for (int r = 0; r < 10; ++r) {
      const CVector u = g.real_vector(grid.node_count() * 2).cast<cplx>();
      const double energy = gradient_energy(grid, 2, u);
      CHECK(u.dot(K * u).real() >= (mu - 0.05) * energy);
    }
  }
}

TEST_CASE("multithreaded assembly is identical to serial") {
  testgen::Gen g(47);
  const EllipticSystem s = g.polynomial_system(Box::cube(3, -1, 1), 2, BoundaryCondition::Free);
  const Grid grid = Grid::uniform(s.box, 5, BoundaryCondition::Free);
  const SparseC a = assemble(s, grid, {1}).K;
  const SparseC b = assemble(s, grid, {3}).K;
  CHECK(max_abs(a - b) == 0.0);
}

TEST_CASE("matrix market round trip") {
  const EllipticSystem s = catalog_get("ex1_3").make();
  const DiscreteForm f = assemble(s, Grid::uniform(s.box, 4, BoundaryCondition::Free));
  std::stringstream ss;
  write_matrix_market(ss, f.K);
  const std::string text = ss.str();
  CHECK(text.rfind("%%MatrixMarket", 0) == 0);
  const SparseC back = read_matrix_market(ss);
  CHECK(max_abs(back - f.K) == 0.0);
}

TEST_CASE("grid box must match the system box") {
  const EllipticSystem s = catalog_get("scalar_heat").make();
  CHECK_THROWS_AS(assemble(s, Grid::uniform(Box::cube(2, 0, 2), 4, BoundaryCondition::Dirichlet)), ArgumentError);
}
