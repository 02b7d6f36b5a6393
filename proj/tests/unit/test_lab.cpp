#include "doctest.h"

#include <cmath>

#include "posilab/catalog.hpp"
#include "posilab/lab.hpp"
#include "support/generators.hpp"

using namespace posilab;

namespace {

EllipticSystem with_gauge(EllipticSystem s, int k, int l, cplx c) {
  const CMatrix I = CMatrix::Identity(s.m, s.m);
  s.C(k, l) = s.C(k, l).plus_constant(c * I);
  s.C(l, k) = s.C(l, k).plus_constant(-c * I);
  return s;
}

bool nonnegative_on_support(const TensorTestFunction& fn, testgen::Gen& g) {
  const Box sup = fn.support();
  for (int s = 0; s < 200; ++s)
    if (fn(g.point_in(sup)) < -1e-14) return false;
  return true;
}

}  // namespace

TEST_CASE("probe recovers symmetrized constant coefficients") {
  testgen::Gen g(61);
  for (int trial = 0; trial < 8; ++trial) {
    const int d = 2 + trial % 2;
    const EllipticSystem s = g.constant_system(Box::cube(d, -1, 1), 2, BoundaryCondition::Dirichlet);
    const Point x0 = g.interior_point(s.box, 0.3);
    const int k = g.integer(0, d - 1), l = g.integer(0, d - 1);
    const ProbeResult r = probe(s, x0, k, l);
    const CMatrix oracle = s.C(k, l).eval(x0) + s.C(l, k).eval(x0);
    CHECK((r.estimate - oracle).cwiseAbs().maxCoeff() <= 1e-10 * (1.0 + oracle.cwiseAbs().maxCoeff()));
    CHECK(r.converged);
    CHECK(r.deltas.size() == 7);
  }
}

TEST_CASE("probe of the null form vanishes") {
  const EllipticSystem s = catalog_get("ex3_5_nullform").make();
  testgen::Gen g(62);
  for (int trial = 0; trial < 5; ++trial) {
    const Point x0 = g.interior_point(s.box, 0.3);
    const ProbeResult r = probe(s, x0, 0, 2);
    CHECK(r.estimate.cwiseAbs().maxCoeff() <= 1e-10);
  }
}

TEST_CASE("probe of an affine coefficient is exact at every level") {
  const Box box = Box::cube(2, -1, 1);
  EllipticSystem s;
  s.box = box;
  s.m = 1;
  const CMatrix one = CMatrix::Identity(1, 1);
  s.coeffs = {MatrixField::constant(box, one), MatrixField::polynomial(box, 1, {{0, 0, {{{1, 0}, 1.0}}}}),
              MatrixField::constant(box, CMatrix::Zero(1, 1)), MatrixField::constant(box, one)};
  const ProbeResult r = probe(s, {0.6, 0.1}, 0, 1);
  for (const auto& e : r.estimates) CHECK(std::abs(e(0, 0) - 0.6) <= 1e-12);
  CHECK(std::abs(r.estimate(0, 0) - 0.6) <= 1e-12);
}

TEST_CASE("black-box and system probes agree") {
  testgen::Gen g(63);
  const EllipticSystem s = g.polynomial_system(Box::cube(2, 0, 2), 2, BoundaryCondition::Dirichlet);
  const Point x0 = {0.7, 1.2};
  const ProbeResult a = probe(s, x0, 1, 0);
  const ProbeResult b = probe(evaluator_for(s), s.box, 2, x0, 1, 0);
  CHECK((a.estimate - b.estimate).cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("probe geometry and index checks") {
  const EllipticSystem s = catalog_get("scalar_heat").make();
  ProbeOptions o;
  o.delta_max = 0.5;
  CHECK_THROWS_AS(probe(s, {0.1, 0.5}, 0, 1, o), GeometryError);
  CHECK_THROWS_AS(probe(s, {0.5, 0.5}, 0, 2), ArgumentError);
  CHECK_THROWS_AS(probe(s, {1.5, 0.5}, 0, 1), GeometryError);
}

TEST_CASE("off-diagonal extraction on full-space forms") {
  const EllipticSystem e = catalog_get("ex1_3").make(BoundaryCondition::Free);
  const OffdiagExtraction x = extract_offdiag_2d(evaluator_for(e), e.box, 2, BoundaryCondition::Free);
  CHECK(x.antisymmetric_constant);
  CHECK(std::abs(x.c12(1, 0) - cplx(3.0, 4.0)) <= 1e-9);
  CHECK(std::abs(x.c12(0, 1)) <= 1e-9);
  CHECK(std::abs(x.c21_average(1, 0) + cplx(3.0, 4.0)) <= 1e-9);

  testgen::Gen g(64);
  EllipticSystem v = g.polynomial_system(Box::cube(2, -1, 1), 1, BoundaryCondition::Free);
  v.C(0, 1) = MatrixField::polynomial(v.box, 1, {{0, 0, {{{1, 0}, 1.0}}}});
  const OffdiagExtraction y = extract_offdiag_2d(evaluator_for(v), v.box, 1, BoundaryCondition::Free);
  CHECK_FALSE(y.antisymmetric_constant);
  CHECK(y.moment_residual > 1e-3);

  CHECK_THROWS_AS(extract_offdiag_2d(evaluator_for(e), e.box, 2, BoundaryCondition::Dirichlet), ContractError);
  const EllipticSystem n = catalog_get("ex3_5_nullform").make();
  CHECK_THROWS_AS(extract_offdiag_2d(evaluator_for(n), n.box, 1, BoundaryCondition::Free), ArgumentError);
}

TEST_CASE("catalog decisions") {
  for (const char* name : {"ex1_3", "ex1_3_entry1", "ex3_5_nullform", "ex5_5", "scalar_heat", "witness_W"}) {
    CAPTURE(name);
    const CatalogEntry e = catalog_get(name);
    const Verdict v = decide_decoupling(e.make());
    if (e.expected == Expectation::NotPositive) {
      CHECK(v.decision == Decision::NotPositive);
      CHECK(v.witness.has_value());
    } else {
      CHECK(v.decision == Decision::PositiveDecoupled);
      CHECK(v.scalar_systems.size() == static_cast<std::size_t>(e.make().m));
    }
  }
}

TEST_CASE("extracted scalar coefficients of the decoupled three-dimensional example") {
  const EllipticSystem s = catalog_get("ex5_5").make();
  const Verdict v = decide_decoupling(s);
  REQUIRE(v.decision == Decision::PositiveDecoupled);
  testgen::Gen g(65);
  for (int t = 0; t < 20; ++t) {
    const Point x = g.point_in(s.box);
    for (const auto& sc : v.scalar_systems)
      for (int k = 0; k < 3; ++k)
        for (int l = 0; l < 3; ++l) CHECK(std::abs(sc.C(k, l).eval(x)(0, 0) - (k == l ? 6.0 : 0.0)) <= 1e-12);
  }
  CHECK(v.scalar_lambda_min == doctest::Approx(6.0));
}

TEST_CASE("lattice witness for the coupled example") {
  const EllipticSystem s = catalog_get("witness_W").make();
  const Verdict v = decide_decoupling(s);
  REQUIRE(v.witness);
  const Witness& w = *v.witness;
  CHECK(w.kind == "lattice");
  CHECK(w.value.real() == doctest::Approx(4.0).epsilon(1e-12));
  CHECK(w.value.real() > w.bound);
  CHECK(std::abs(reevaluate_witness(s, w) - w.value) <= 1e-12);
}

TEST_CASE("witness preconditions") {
  const EllipticSystem s = catalog_get("witness_W").make();
  CHECK_THROWS_AS(construct_witness(s, {0, 0}, 0, 1, CMatrix::Identity(2, 2)), ContractError);
  CMatrix Q = CMatrix::Zero(2, 2);
  Q(1, 0) = cplx(0.0, 1.0);
  CHECK_THROWS_AS(construct_witness(s, {0, 0}, 0, 1, Q), ContractError);
}

TEST_CASE("witnesses for random coupled systems are valid") {
  testgen::Gen g(66);
  for (std::uint64_t seed = 0; seed < 8; ++seed) {
    CAPTURE(seed);
    const EllipticSystem s = make_rand_coupled(seed);
    const Verdict v = decide_decoupling(s);
    REQUIRE(v.decision == Decision::NotPositive);
    REQUIRE(v.witness);
    const Witness& w = *v.witness;
    const cplx again = reevaluate_witness(s, w);
    CHECK(std::abs(again - w.value) <= 1e-10 * (1.0 + std::abs(w.value)));
    if (w.kind == "lattice") CHECK(again.real() > w.bound);
    else CHECK(std::abs(again.imag()) > w.bound);
    for (int n = 0; n < s.m; ++n) {
      CHECK(w.f(n).real() >= 0.0);
      CHECK(w.g(n).real() >= 0.0);
      CHECK((w.f(n) == cplx(0.0) || w.g(n) == cplx(0.0)));
    }
    CHECK(nonnegative_on_support(w.u_plus, g));
    CHECK(nonnegative_on_support(w.u_minus, g));
  }
}

TEST_CASE("gauge terms do not change Dirichlet decisions") {
  testgen::Gen g(67);
  for (std::uint64_t seed = 0; seed < 6; ++seed) {
    const EllipticSystem s = make_rand_decoupled(seed);
    const EllipticSystem t = with_gauge(s, 0, 1, g.complex_value(2.0));
    CHECK(decide_decoupling(t).decision == decide_decoupling(s).decision);
    const EllipticSystem c = make_rand_coupled(seed);
    CHECK(decide_decoupling(with_gauge(c, 0, 1, g.complex_value(2.0))).decision == Decision::NotPositive);
  }
}

TEST_CASE("extracted scalar systems respect the input bounds") {
  for (std::uint64_t seed = 0; seed < 12; ++seed) {
    const EllipticSystem s = make_rand_decoupled(seed);
    const Verdict v = decide_decoupling(s);
    REQUIRE(v.decision == Decision::PositiveDecoupled);
    CHECK(v.scalar_bound <= v.bound * (1.0 + 1e-12));
    CHECK(v.scalar_lambda_min >= v.ellipticity.lambda_min - 1e-9);
  }
}

TEST_CASE("probe-based decisions") {
  DecisionOptions o;
  o.use_probe = true;
  CHECK(decide_decoupling(catalog_get("ex1_3").make(), o).decision == Decision::PositiveDecoupled);
  const Verdict w = decide_decoupling(catalog_get("witness_W").make(), o);
  CHECK(w.decision == Decision::NotPositive);
  REQUIRE(w.witness);
  CHECK(w.witness->source == "probe");
  CHECK(w.probes.size() >= 9);
}

TEST_CASE("form criterion") {
  SUBCASE("heat is never violated") {
    const EllipticSystem s = catalog_get("scalar_heat").make();
    const DiscreteForm f = assemble(s, Grid::uniform(s.box, 10, s.bc));
    CHECK(form_criterion_sample(f, 200, 7) <= 1e-12);
    CHECK(form_criterion_state(f, RVector::Ones(f.size())) == 0.0);
  }
  SUBCASE("the witness pair violates it on a grid") {
    const EllipticSystem s = catalog_get("witness_W").make();
    const Verdict v = decide_decoupling(s);
    REQUIRE(v.witness);
    const Grid grid = Grid::uniform(s.box, 32, s.bc);
    const DiscreteForm f = assemble(s, grid);
    const double value = form_criterion_state(f, witness_state(*v.witness, grid));
    CHECK(value > v.witness->bound);
    CHECK(value == doctest::Approx(4.0).epsilon(1e-6));
  }
  SUBCASE("complex forms are rejected") {
    const EllipticSystem s = catalog_get("ex1_3").make(BoundaryCondition::Free);
    const DiscreteForm f = assemble(s, Grid::uniform(s.box, 4, s.bc));
    CHECK_THROWS_AS(form_criterion_state(f, RVector::Ones(f.size())), ContractError);
  }
}
