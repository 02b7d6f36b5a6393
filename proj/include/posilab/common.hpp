#pragma once

#include <complex>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace posilab {

using cplx = std::complex<double>;
using CMatrix = Eigen::MatrixXcd;
using CVector = Eigen::VectorXcd;
using RMatrix = Eigen::MatrixXd;
using RVector = Eigen::VectorXd;
using Point = std::vector<double>;

struct Interval {
  double lo = 0.0;
  double hi = 1.0;
  double length() const { return hi - lo; }
  bool contains(double t) const { return t >= lo && t <= hi; }
};

/// Axis-aligned box (a_1,b_1) x ... x (a_d,b_d).
struct Box {
  std::vector<Interval> sides;

  Box() = default;
  explicit Box(std::vector<Interval> s) : sides(std::move(s)) {}
  static Box cube(int d, double lo, double hi) {
    return Box(std::vector<Interval>(static_cast<std::size_t>(d), Interval{lo, hi}));
  }

  int dim() const { return static_cast<int>(sides.size()); }
  bool contains(const Point& x) const;
  double volume() const;
  /// Largest r such that x + r*[-1,1]^d stays in the closed box.
  double inner_radius(const Point& x) const;
  bool operator==(const Box& o) const;
};

enum class BoundaryCondition { Dirichlet, Free };

std::string to_string(BoundaryCondition bc);
BoundaryCondition parse_bc(const std::string& s);

// Error taxonomy. The CLI maps ConfigError to exit 2 and NumericalError to 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ArgumentError : Error {
  using Error::Error;
};
struct CapacityError : Error {
  using Error::Error;
};
struct GeometryError : Error {
  using Error::Error;
};
struct ContractError : Error {
  using Error::Error;
};
struct NumericalError : Error {
  using Error::Error;
};
struct ConfigError : Error {
  using Error::Error;
};

std::string format_point(const Point& x);

}  // namespace posilab
