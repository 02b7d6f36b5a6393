#pragma once

#include <span>
#include <vector>

#include "posilab/coefficients.hpp"

namespace posilab {

/// Compactly supported piecewise polynomial on the real line; zero outside
/// [breaks.front(), breaks.back()]. Piece j holds ascending-power
/// coefficients in the global variable t on [breaks[j], breaks[j+1]].
class Piecewise1D {
 public:
  Piecewise1D() = default;
  Piecewise1D(std::vector<double> breaks, std::vector<std::vector<double>> pieces,
              bool require_continuity = true);

  /// Continuous piecewise-linear interpolant of (xs, ys), zero outside [xs.front(), xs.back()].
  static Piecewise1D from_nodes(const std::vector<double>& xs, const std::vector<double>& ys);

  double operator()(double t) const;
  Piecewise1D derivative() const;
  Piecewise1D scaled(double s) const;

  int degree() const;
  bool is_zero() const { return pieces_.empty(); }
  const std::vector<double>& breaks() const { return breaks_; }
  const std::vector<std::vector<double>>& pieces() const { return pieces_; }

 private:
  std::vector<double> breaks_;
  std::vector<std::vector<double>> pieces_;
};

/// eta(t) = (1 - |t|)^+.
Piecewise1D hat();
/// rho(t) = eta(2(t - 1/2)) + eta(2(t + 1/2)).
Piecewise1D double_hat();
/// eta((t - center) / halfwidth).
Piecewise1D tent(double center, double halfwidth);

/// x -> scale * prod_i factor_i((x_i - center_i) / dilation_i).
struct TensorTestFunction {
  double scale = 1.0;
  std::vector<Piecewise1D> factors;
  Point center;
  std::vector<double> dilation;

  static TensorTestFunction product(double scale, std::vector<Piecewise1D> factors);

  int dim() const { return static_cast<int>(factors.size()); }
  bool is_zero() const;
  double operator()(const Point& x) const;
  /// Partial derivative along axis k.
  double derivative(int k, const Point& x) const;
  /// phi_delta(x) = phi((x - x0) / delta) for a function given in reference coordinates.
  TensorTestFunction dilated(const Point& x0, double delta) const;
  /// Smallest box containing the support.
  Box support() const;
};

/// A nonnegative pair realising a single symmetric interaction pattern.
struct TestPair {
  TensorTestFunction phi;
  TensorTestFunction psi;
  double tau = 0.0;
  int ktilde = 0;  // 0-based
  int ltilde = 0;
  int case_id = 5;
  RMatrix interaction;  // G_kl = int (d_l phi)(d_k psi)
};

/// Builds the five-case tent construction and verifies G by exact quadrature.
/// G_{kt,lt} = G_{lt,kt} = tau (a single entry tau when kt == lt); all other
/// entries vanish. Indices are 0-based.
TestPair build_test_pair(double tau, int ktilde, int ltilde, int d);

/// Expected interaction matrix for (tau, kt, lt).
RMatrix expected_interaction(double tau, int ktilde, int ltilde, int d);

/// One factor of an integrand: fn itself or its partial derivative along deriv_axis.
struct IntegrandFactor {
  const TensorTestFunction* fn = nullptr;
  int deriv_axis = -1;
};

constexpr int kDefaultGaussOrder = 8;

/// Exact integral of prod(factors) * coefficient over `domain` (or over R^d
/// when domain is null) by per-piece Gauss-Legendre quadrature composed
/// through Fubini. Throws CapacityError when some per-axis piece degree
/// exceeds 2*order - 1.
cplx exact_integral(std::span<const IntegrandFactor> factors, const Polynomial& coefficient,
                    const Box* domain = nullptr, int gauss_order = kDefaultGaussOrder);
double exact_integral(std::span<const IntegrandFactor> factors, const Box* domain = nullptr,
                      int gauss_order = kDefaultGaussOrder);

/// G_kl = int (d_l phi)(d_k psi) over R^d.
RMatrix interaction_matrix(const TensorTestFunction& phi, const TensorTestFunction& psi);

/// Gauss-Legendre integral of f on [a, b] with one of the supported orders.
template <class F>
double gauss_legendre(F&& f, double a, double b, int order);
int supported_gauss_order(int requested);

}  // namespace posilab

#include "posilab/detail/gauss_legendre.hpp"
