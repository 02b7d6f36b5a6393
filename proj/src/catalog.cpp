#include "posilab/catalog.hpp"

#include <random>
#include <regex>

#include "posilab/multop.hpp"

namespace posilab {

namespace {

Polynomial multiply(const Polynomial& a, const Polynomial& b) {
  Polynomial out;
  for (const auto& s : a)
    for (const auto& t : b) {
      PolyTerm u{s.exps, s.coef * t.coef};
      for (std::size_t i = 0; i < u.exps.size(); ++i) u.exps[i] += t.exps[i];
      out.push_back(std::move(u));
    }
  return out;
}

// x_i^2 - 1 in d = 3.
Polynomial square_minus_one(int i) {
  std::vector<int> e(3, 0);
  e[static_cast<std::size_t>(i)] = 2;
  return {{e, 1.0}, {{0, 0, 0}, -1.0}};
}

Polynomial coordinate(int i, double c) {
  std::vector<int> e(3, 0);
  e[static_cast<std::size_t>(i)] = 1;
  return {{e, c}};
}

CMatrix eye(int m, double s) { return s * CMatrix::Identity(m, m); }

EllipticSystem blank(const Box& box, int m, BoundaryCondition bc, double mu) {
  EllipticSystem s;
  s.box = box;
  s.m = m;
  s.bc = bc;
  s.mu = mu;
  const int d = box.dim();
  for (int i = 0; i < d * d; ++i) s.coeffs.push_back(MatrixField::constant(box, CMatrix::Zero(m, m)));
  return s;
}

EllipticSystem ex1_3(BoundaryCondition bc, cplx entry, double mu) {
  const Box box = Box::cube(2, -4.0, 4.0);
  EllipticSystem s = blank(box, 2, bc, mu);
  CMatrix c12 = CMatrix::Zero(2, 2);
  c12(1, 0) = entry;
  s.C(0, 0) = MatrixField::constant(box, eye(2, 6.0));
  s.C(1, 1) = MatrixField::constant(box, eye(2, 6.0));
  s.C(0, 1) = MatrixField::constant(box, c12);
  s.C(1, 0) = MatrixField::constant(box, -c12);
  return s;
}

EllipticSystem nullform(BoundaryCondition bc) {
  const Box box = Box::cube(3, -1.0, 1.0);
  EllipticSystem s = blank(box, 1, bc, 1.0);
  for (int k = 0; k < 3; ++k)
    for (int l = 0; l < 3; ++l) {
      if (k == l) continue;
      const double sign = k < l ? 1.0 : -1.0;
      Polynomial p = nullform_entry(k, l);
      for (auto& t : p) t.coef *= sign;
      s.C(k, l) = MatrixField::polynomial(box, 1, {{0, 0, std::move(p)}});
    }
  return s;
}

EllipticSystem ex5_5(BoundaryCondition bc) {
  const Box box = Box::cube(3, -1.0, 1.0);
  const EllipticSystem scalar = nullform(bc);
  EllipticSystem s = blank(box, 2, bc, 5.0);
  for (int k = 0; k < 3; ++k) {
    s.C(k, k) = MatrixField::constant(box, eye(2, 6.0));
    for (int l = 0; l < 3; ++l) {
      if (k == l) continue;
      std::vector<MatrixField::Entry> entries;
      for (const auto& t : scalar.C(k, l).terms()) {
        if (t.coef(0, 0) == cplx(0.0)) continue;
        if (entries.empty()) entries.push_back({0, 1, {}});
        entries.front().poly.push_back({t.exps, t.coef(0, 0)});
      }
      s.C(k, l) = MatrixField::polynomial(box, 2, entries);
    }
  }
  return s;
}

EllipticSystem scalar_heat(BoundaryCondition bc) {
  const Box box = Box::cube(2, 0.0, 1.0);
  EllipticSystem s = blank(box, 1, bc, 1.0);
  s.C(0, 0) = MatrixField::constant(box, eye(1, 1.0));
  s.C(1, 1) = MatrixField::constant(box, eye(1, 1.0));
  return s;
}

EllipticSystem witness_w(BoundaryCondition bc) {
  const Box box = Box::cube(2, -1.0, 1.0);
  EllipticSystem s = blank(box, 2, bc, 5.0);
  CMatrix r = CMatrix::Zero(2, 2);
  r(1, 0) = 1.0;
  s.C(0, 0) = MatrixField::constant(box, eye(2, 6.0));
  s.C(1, 1) = MatrixField::constant(box, eye(2, 6.0));
  s.C(0, 1) = MatrixField::constant(box, r);
  s.C(1, 0) = MatrixField::constant(box, r);
  return s;
}

// amp * (a0 + a1 x_i + a2 x_j^2) / (|a0| + |a1| + |a2|), bounded by amp on (-1,1)^d.
Polynomial bounded_poly(std::mt19937_64& rng, int d, double amp) {
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  std::uniform_int_distribution<int> axis(0, d - 1);
  const double a0 = u(rng), a1 = u(rng), a2 = u(rng);
  const double s = amp / (std::abs(a0) + std::abs(a1) + std::abs(a2) + 1e-300);
  std::vector<int> e0(static_cast<std::size_t>(d), 0), e1 = e0, e2 = e0;
  e1[static_cast<std::size_t>(axis(rng))] = 1;
  e2[static_cast<std::size_t>(axis(rng))] = 2;
  return {{e0, a0 * s}, {e1, a1 * s}, {e2, a2 * s}};
}

EllipticSystem random_decoupled(std::uint64_t seed, int d, int m) {
  std::mt19937_64 rng(seed);
  const Box box = Box::cube(d, -1.0, 1.0);
  const double mu = 1.0;
  const double amp = 0.1;
  EllipticSystem s = blank(box, m, BoundaryCondition::Dirichlet, mu);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) {
      std::vector<MatrixField::Entry> entries;
      for (int n = 0; n < m; ++n) {
        Polynomial p = bounded_poly(rng, d, amp);
        if (k == l) p.push_back({std::vector<int>(static_cast<std::size_t>(d), 0), mu + 1.0 + d * amp});
        entries.push_back({n, n, std::move(p)});
      }
      s.C(k, l) = MatrixField::polynomial(box, m, entries);
    }
  return s;
}

}  // namespace

Polynomial nullform_entry(int k, int l) {
  if (k > l) std::swap(k, l);
  if (k == 0 && l == 1) return multiply(multiply(square_minus_one(0), square_minus_one(1)), coordinate(2, -1.0));
  if (k == 1 && l == 2) return multiply(multiply(square_minus_one(1), square_minus_one(2)), coordinate(0, -1.0));
  if (k == 0 && l == 2) return multiply(multiply(square_minus_one(0), square_minus_one(2)), coordinate(1, 1.0));
  throw ArgumentError("nullform_entry: needs an off-diagonal pair");
}

std::string to_string(Expectation e) {
  switch (e) {
    case Expectation::PositiveDecoupled: return "POSITIVE-DECOUPLED";
    case Expectation::NotPositive: return "NOT-POSITIVE";
    case Expectation::NullForm: return "NULL-FORM";
  }
  return "?";
}

EllipticSystem make_rand_decoupled(std::uint64_t seed) {
  const int d = 2 + static_cast<int>(seed % 2);
  const int m = 1 + static_cast<int>((seed / 2) % 3);
  return random_decoupled(seed, d, m);
}

EllipticSystem make_rand_coupled(std::uint64_t seed, double coupling_norm) {
  const int d = 2 + static_cast<int>(seed % 2);
  const int m = 2 + static_cast<int>((seed / 2) % 2);
  EllipticSystem s = random_decoupled(seed ^ 0x9e3779b97f4a7c15ULL, d, m);
  s.mu = 0.5;
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  if (coupling_norm <= 0.0) coupling_norm = 0.1 + 0.4 * (0.5 * (u(rng) + 1.0));
  RMatrix E = RMatrix::Zero(m, m);
  for (int i = 0; i < m; ++i)
    for (int j = i + 1; j < m; ++j) E(i, j) = E(j, i) = u(rng);
  if (E.norm() == 0.0) E(0, 1) = E(1, 0) = 1.0;
  E *= coupling_norm / operator_norm(E.cast<cplx>());
  std::uniform_int_distribution<int> axis(0, d - 1);
  const int k = axis(rng), l = axis(rng);
  const CMatrix Ec = E.cast<cplx>();
  s.C(k, l) = s.C(k, l).plus_constant(Ec);
  if (k != l) s.C(l, k) = s.C(l, k).plus_constant(Ec);
  return s;
}

std::vector<std::string> catalog_names() {
  return {"ex1_3", "ex1_3_entry1", "ex3_5_nullform", "ex5_5", "scalar_heat", "witness_W", "rand_decoupled(<seed>)",
          "rand_coupled(<seed>)"};
}

CatalogEntry catalog_get(const std::string& name) {
  CatalogEntry e;
  e.name = name;
  if (name == "ex1_3") {
    e.summary = "d=2, m=2 on (-4,4)^2: C11=C22=6I, C12 has entry 3+4i at (2,1), C21=-C12";
    e.expected_diagonal = 6.0;
    e.factory = [](BoundaryCondition bc) { return ex1_3(bc, cplx(3.0, 4.0), 3.5); };
    return e;
  }
  if (name == "ex1_3_entry1") {
    e.summary = "ex1_3 with the coupling entry replaced by 1";
    e.expected_diagonal = 6.0;
    e.factory = [](BoundaryCondition bc) { return ex1_3(bc, cplx(1.0, 0.0), 5.5); };
    return e;
  }
  if (name == "ex3_5_nullform") {
    e.summary = "d=3, m=1 on (-1,1)^3: antisymmetric polynomial coefficients whose form vanishes on H^1";
    e.expected = Expectation::NullForm;
    e.default_bc = BoundaryCondition::Free;
    e.factory = nullform;
    return e;
  }
  if (name == "ex5_5") {
    e.summary = "d=3, m=2 on (-1,1)^3: 6I diagonal, off-diagonal C_kl = c_kl E_12 built from the null form";
    e.expected_diagonal = 6.0;
    e.factory = ex5_5;
    return e;
  }
  if (name == "scalar_heat") {
    e.summary = "d=2, m=1 on (0,1)^2: the Laplacian";
    e.expected_diagonal = 1.0;
    e.factory = scalar_heat;
    return e;
  }
  if (name == "witness_W") {
    e.summary = "d=2, m=2 on (-1,1)^2: C11=C22=6I, C12=C21=R with R(2,1)=1";
    e.expected = Expectation::NotPositive;
    e.factory = witness_w;
    return e;
  }
  static const std::regex seeded(R"((rand_decoupled|rand_coupled)[(:](\d+)\)?)");
  std::smatch mt;
  if (std::regex_match(name, mt, seeded)) {
    const std::uint64_t seed = std::stoull(mt[2].str());
    const bool coupled = mt[1].str() == "rand_coupled";
    e.summary = coupled ? "random system with a symmetric non-diagonal constant coupling"
                        : "random channel-diagonal real polynomial system";
    e.expected = coupled ? Expectation::NotPositive : Expectation::PositiveDecoupled;
    e.factory = [seed, coupled](BoundaryCondition bc) {
      EllipticSystem s = coupled ? make_rand_coupled(seed) : make_rand_decoupled(seed);
      s.bc = bc;
      return s;
    };
    return e;
  }
  throw ConfigError("unknown catalog entry '" + name + "'");
}

}  // namespace posilab
