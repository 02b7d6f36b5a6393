#include "posilab/common.hpp"

#include <algorithm>
#include <cstdio>
#include <limits>

namespace posilab {

bool Box::contains(const Point& x) const {
  if (static_cast<int>(x.size()) != dim()) return false;
  for (std::size_t i = 0; i < x.size(); ++i)
    if (!sides[i].contains(x[i])) return false;
  return true;
}

double Box::volume() const {
  double v = 1.0;
  for (const auto& s : sides) v *= s.length();
  return v;
}

double Box::inner_radius(const Point& x) const {
  double r = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < sides.size(); ++i)
    r = std::min({r, x[i] - sides[i].lo, sides[i].hi - x[i]});
  return r;
}

bool Box::operator==(const Box& o) const {
  if (o.dim() != dim()) return false;
  for (std::size_t i = 0; i < sides.size(); ++i)
    if (sides[i].lo != o.sides[i].lo || sides[i].hi != o.sides[i].hi) return false;
  return true;
}

std::string to_string(BoundaryCondition bc) {
  return bc == BoundaryCondition::Dirichlet ? "dirichlet" : "free";
}

BoundaryCondition parse_bc(const std::string& s) {
  if (s == "dirichlet" || s == "Dirichlet") return BoundaryCondition::Dirichlet;
  if (s == "free" || s == "Free" || s == "neumann") return BoundaryCondition::Free;
  throw ConfigError("unknown boundary condition '" + s + "' (expected dirichlet|free)");
}

std::string format_point(const Point& x) {
  std::string out = "(";
  char buf[64];
  for (std::size_t i = 0; i < x.size(); ++i) {
    std::snprintf(buf, sizeof buf, "%.6g", x[i]);
    out += buf;
    if (i + 1 < x.size()) out += ", ";
  }
  return out + ")";
}

}  // namespace posilab
