#include "doctest.h"

#include <Eigen/Eigenvalues>

#include "posilab/catalog.hpp"
#include "posilab/coefficients.hpp"
#include "support/generators.hpp"

using namespace posilab;

namespace {

// Smallest eigenvalue of the Hermitian part through the general complex
// eigensolver, independent of the library's self-adjoint path.
double oracle_min_eig(const CMatrix& B) {
  const CMatrix H = 0.5 * (B + B.adjoint());
  Eigen::ComplexEigenSolver<CMatrix> es(H);
  double lo = 1e300;
  for (Eigen::Index i = 0; i < es.eigenvalues().size(); ++i) lo = std::min(lo, es.eigenvalues()(i).real());
  return lo;
}

}  // namespace

TEST_CASE("constant field evaluates to its matrix everywhere") {
  const Box box = Box::cube(2, -4, 4);
  const MatrixField f = MatrixField::constant(box, 6.0 * CMatrix::Identity(2, 2));
  CHECK((f.eval({1.5, -3.0}) - 6.0 * CMatrix::Identity(2, 2)).norm() == 0.0);
  CHECK(f.kind() == FieldKind::Constant);
  CHECK(f.bound() == doctest::Approx(6.0));
}

TEST_CASE("null-form polynomial entry values") {
  const Box box = Box::cube(3, -1, 1);
  const MatrixField f = MatrixField::polynomial(box, 1, {{0, 0, nullform_entry(0, 1)}});
  CHECK(std::abs(f.eval({0, 0, 0})(0, 0)) == 0.0);
  // -(0 - 1)(0 - 1)(1/2) = -1/2
  CHECK(f.eval({0, 0, 0.5})(0, 0).real() == doctest::Approx(-0.5).epsilon(1e-15));
  CHECK(f.degree() == 5);
}

TEST_CASE("evaluation outside the box is a domain error") {
  const MatrixField f = MatrixField::constant(Box::cube(2, 0, 1), CMatrix::Identity(1, 1));
  CHECK_THROWS_AS(f.eval({1.5, 0.5}), DomainError);
  CHECK_NOTHROW(f.eval({1.0, 0.0}));
}

TEST_CASE("grid-sampled ties go to the lower cell") {
  const Box box = Box::cube(1, 0, 1);
  std::vector<CMatrix> vals = {CMatrix::Constant(1, 1, 1.0), CMatrix::Constant(1, 1, 2.0)};
  const MatrixField f = MatrixField::grid_sampled(box, {2}, vals);
  CHECK(f.eval({0.5})(0, 0).real() == 1.0);
  CHECK(f.eval({0.50001})(0, 0).real() == 2.0);
  CHECK(f.eval({0.0})(0, 0).real() == 1.0);
  CHECK(f.eval({1.0})(0, 0).real() == 2.0);
}

TEST_CASE("polynomial degree above the configured capacity is rejected") {
  const Box box = Box::cube(2, -1, 1);
  CHECK_THROWS_AS(MatrixField::polynomial(box, 1, {{0, 0, {{{4, 3}, 1.0}}}}), CapacityError);
  CHECK_NOTHROW(MatrixField::polynomial(box, 1, {{0, 0, {{{4, 3}, 1.0}}}}, 7));
}

TEST_CASE("ellipticity of the scalar Laplacian is 1") {
  const EllipticSystem s = catalog_get("scalar_heat").make();
  const EllipticityReport r = check_ellipticity(s);
  CHECK(r.lambda_min == doctest::Approx(1.0));
  CHECK(r.pass);
}

TEST_CASE("ellipticity of the complex antisymmetric coupling example") {
  // The coupling block is not Hermitian, so its Hermitian part does not
  // cancel: the eigenvalues are 6 +- |3+4i|/2.
  const EllipticSystem s = catalog_get("ex1_3").make();
  const EllipticityReport r = check_ellipticity(s);
  const double oracle = oracle_min_eig(s.block_matrix({0.0, 0.0}));
  CHECK(oracle == doctest::Approx(6.0 - 2.5).epsilon(1e-14));
  CHECK(r.lambda_min == doctest::Approx(oracle).epsilon(1e-13));
  CHECK(r.pass);

  const EllipticSystem s1 = catalog_get("ex1_3_entry1").make();
  CHECK(check_ellipticity(s1).lambda_min == doctest::Approx(5.5).epsilon(1e-13));
}

TEST_CASE("ellipticity of the witness system") {
  const EllipticSystem s = catalog_get("witness_W").make();
  const double oracle = oracle_min_eig(s.block_matrix({0.3, -0.2}));
  CHECK(oracle == doctest::Approx(5.5).epsilon(1e-14));
  CHECK(check_ellipticity(s).lambda_min == doctest::Approx(5.5).epsilon(1e-13));
}

TEST_CASE("ellipticity failure is reported with the minimising point") {
  EllipticSystem s = catalog_get("scalar_heat").make();
  s.mu = 2.0;
  const EllipticityReport r = check_ellipticity(s);
  CHECK_FALSE(r.pass);
  CHECK(r.argmin.size() == 2);
}

TEST_CASE("check transform examples") {
  CMatrix q(1, 1);
  q(0, 0) = cplx(0, 1);
  CHECK(check_transform(q).norm() == 0.0);
  CMatrix q2 = CMatrix::Zero(2, 2);
  q2(1, 0) = cplx(3, 4);
  const CMatrix c2 = check_transform(q2);
  CHECK(c2(1, 0) == cplx(3, 0));
  testgen::Gen g(11);
  const CMatrix r = g.real_matrix(3).cast<cplx>();
  CHECK((check_transform(r) - r).norm() == 0.0);
}

TEST_CASE("check transform equals the realification definition") {
  testgen::Gen g(12);
  for (int trial = 0; trial < 200; ++trial) {
    const int m = g.integer(1, 5);
    const CMatrix Q = g.complex_matrix(m);
    const CVector f = g.complex_vector(m);
    const CVector re = f.real().cast<cplx>();
    const CVector im = f.imag().cast<cplx>();
    const CVector def = (Q * re).real().cast<cplx>() + cplx(0, 1) * (Q * im).real().cast<cplx>();
    CHECK((check_transform(Q) * f - def).norm() <= 1e-13 * (1.0 + def.norm()));
    CHECK((check_transform(check_transform(Q)) - check_transform(Q)).norm() == 0.0);
  }
}

TEST_CASE("check transform never lowers ellipticity") {
  testgen::Gen g(13);
  for (int trial = 0; trial < 100; ++trial) {
    const int d = g.integer(1, 4);
    const int m = g.integer(1, 4);
    const Box box = Box::cube(d, -1, 1);
    const EllipticSystem s = g.constant_system(box, m, BoundaryCondition::Dirichlet, 1.0);
    const EllipticSystem c = check_transform(s);
    const auto pts = default_sample_points(s, 2);
    const double before = check_ellipticity(s, pts).lambda_min;
    const double after = check_ellipticity(c, pts).lambda_min;
    CHECK(after >= before - 1e-10);
  }
}

TEST_CASE("bound dominates the operator norm at random points") {
  testgen::Gen g(14);
  for (int trial = 0; trial < 12; ++trial) {
    const int d = g.integer(1, 3);
    const int m = g.integer(1, 3);
    const Box box({{-1.5, 0.5}, {0.0, 2.0}, {-1.0, 1.0}});
    const Box b(std::vector<Interval>(box.sides.begin(), box.sides.begin() + d));
    MatrixField f;
    switch (trial % 3) {
      case 0: f = MatrixField::constant(b, g.complex_matrix(m)); break;
      case 1: f = g.polynomial_field(b, m, 4, 3); break;
      default: f = g.grid_field(b, m, std::vector<int>(static_cast<std::size_t>(d), 3)); break;
    }
    const double M = f.bound();
    for (int s = 0; s < 1000; ++s) {
      Eigen::JacobiSVD<CMatrix> svd(f.eval(g.point_in(b)));
      CHECK(svd.singularValues()(0) <= M * (1.0 + 1e-12));
    }
  }
}

TEST_CASE("symmetrized coefficients") {
  const EllipticSystem s = catalog_get("ex1_3").make();
  CHECK(symmetrized(s, 0, 1, {1.0, 2.0}).norm() == 0.0);
  CHECK((symmetrized(s, 0, 0, {1.0, 2.0}) - 12.0 * CMatrix::Identity(2, 2)).norm() == 0.0);
  const EllipticSystem w = catalog_get("witness_W").make();
  CMatrix twoR = CMatrix::Zero(2, 2);
  twoR(1, 0) = 2.0;
  CHECK((symmetrized(w, 0, 1, {0.0, 0.0}) - twoR).norm() == 0.0);
}

TEST_CASE("system validation catches shape errors") {
  EllipticSystem s = catalog_get("scalar_heat").make();
  s.coeffs.pop_back();
  CHECK_THROWS_AS(s.validate(), ArgumentError);
  EllipticSystem t = catalog_get("scalar_heat").make();
  t.C(0, 1) = MatrixField::constant(t.box, CMatrix::Zero(2, 2));
  CHECK_THROWS_AS(t.validate(), ArgumentError);
}
