#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "posilab/coefficients.hpp"

namespace posilab {

enum class Expectation { PositiveDecoupled, NotPositive, NullForm };
std::string to_string(Expectation e);

struct CatalogEntry {
  std::string name;
  std::string summary;
  Expectation expected = Expectation::PositiveDecoupled;
  BoundaryCondition default_bc = BoundaryCondition::Dirichlet;
  /// Constant value of c^(n)_kk when the extracted scalar systems are known in closed form.
  std::optional<double> expected_diagonal;
  std::function<EllipticSystem(BoundaryCondition)> factory;

  EllipticSystem make() const { return factory(default_bc); }
  EllipticSystem make(BoundaryCondition bc) const { return factory(bc); }
};

/// Names accepted by catalog_get; seeded entries take the form `rand_decoupled(7)`.
std::vector<std::string> catalog_names();

/// Throws ConfigError for unknown names.
CatalogEntry catalog_get(const std::string& name);

EllipticSystem make_rand_decoupled(std::uint64_t seed);
/// Adds a symmetric real non-diagonal constant E with coupling_norm = ||E||_2 to C_kl and C_lk.
EllipticSystem make_rand_coupled(std::uint64_t seed, double coupling_norm = -1.0);

/// The three curl-free polynomials of the null-form example on (-1,1)^3,
/// indexed by unordered pair (0,1), (1,2), (0,2).
Polynomial nullform_entry(int k, int l);

}  // namespace posilab
