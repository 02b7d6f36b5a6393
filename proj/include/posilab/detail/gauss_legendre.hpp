#pragma once

#include <boost/math/quadrature/gauss.hpp>

namespace posilab {

template <class F>
double gauss_legendre(F&& f, double a, double b, int order) {
  using boost::math::quadrature::gauss;
  switch (supported_gauss_order(order)) {
    case 4: return gauss<double, 4>::integrate(f, a, b);
    case 8: return gauss<double, 8>::integrate(f, a, b);
    case 12: return gauss<double, 12>::integrate(f, a, b);
    case 16: return gauss<double, 16>::integrate(f, a, b);
    default: return gauss<double, 20>::integrate(f, a, b);
  }
}

}  // namespace posilab
