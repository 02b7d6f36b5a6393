#include "posilab/lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <sstream>

#include "posilab/parallel.hpp"

namespace posilab {

namespace {

CVector unit(int m, int i) { return CVector::Unit(m, i); }

double probe_tau(int kt, int lt) { return kt == lt ? 2.0 : 1.0; }

void check_indices(int kt, int lt, int d) {
  if (kt < 0 || lt < 0 || kt >= d || lt >= d) throw ArgumentError("index pair out of range");
}

double default_delta(const Box& box, const Point& x0) {
  if (!box.contains(x0)) throw GeometryError("point " + format_point(x0) + " lies outside the domain");
  const double r = box.inner_radius(x0);
  if (!(r > 0.0)) throw GeometryError("point " + format_point(x0) + " lies on the boundary");
  return std::min(1.0, r);
}

void check_delta(const Box& box, const Point& x0, double delta) {
  const double r = box.inner_radius(x0);
  if (!(delta > 0.0) || delta > r * (1.0 + 1e-12))
    throw GeometryError("delta " + std::to_string(delta) + " does not keep the support inside the domain around " +
                        format_point(x0));
}

// Polynomial extrapolation to zero through (xs[i], ys[i]).
CMatrix neville_at_zero(const std::vector<double>& xs, std::vector<CMatrix> ys) {
  const std::size_t n = xs.size();
  for (std::size_t k = 1; k < n; ++k)
    for (std::size_t i = n - 1; i >= k; --i) {
      ys[i] = (xs[i - k] * ys[i] - xs[i] * ys[i - 1]) / (xs[i - k] - xs[i]);
      if (i == k) break;
    }
  return ys.back();
}

Piecewise1D linear_on(const Interval& s, double c0, double c1) { return Piecewise1D({s.lo, s.hi}, {{c0, c1}}, false); }
Piecewise1D quadratic_on(const Interval& s) { return Piecewise1D({s.lo, s.hi}, {{0.0, 0.0, 0.5}}, false); }

}  // namespace

FormEvaluator evaluator_for(const EllipticSystem& sys, int gauss_order) {
  return [sys, gauss_order](const TensorTestFunction& phi, const CVector& f, const TensorTestFunction& psi,
                            const CVector& g) { return form_value(sys, phi, f, psi, g, gauss_order); };
}

ProbeResult probe(const FormEvaluator& form, const Box& domain, int m, const Point& x0, int ktilde, int ltilde,
                  const ProbeOptions& opts) {
  const int d = domain.dim();
  if (static_cast<int>(x0.size()) != d) throw ArgumentError("probe: point dimension mismatch");
  check_indices(ktilde, ltilde, d);
  if (opts.levels < 1) throw ArgumentError("probe: need at least one delta level");
  const double dmax = opts.delta_max > 0.0 ? opts.delta_max : default_delta(domain, x0);
  check_delta(domain, x0, dmax);

  const TestPair pair = build_test_pair(probe_tau(ktilde, ltilde), ktilde, ltilde, d);
  ProbeResult res;
  res.x0 = x0;
  res.ktilde = ktilde;
  res.ltilde = ltilde;
  for (int j = 0; j < opts.levels; ++j) {
    const double delta = dmax * std::ldexp(1.0, -j);
    const TensorTestFunction phi = pair.phi.dilated(x0, delta);
    const TensorTestFunction psi = pair.psi.dilated(x0, delta);
    const double s = std::pow(delta, 2 - d);
    CMatrix E(m, m);
    for (int i = 0; i < m; ++i)
      for (int jj = 0; jj < m; ++jj) E(i, jj) = s * form(phi, unit(m, jj), psi, unit(m, i));
    res.deltas.push_back(delta);
    res.estimates.push_back(std::move(E));
  }

  const double floor = 1e-12 * (1.0 + res.estimates.back().cwiseAbs().maxCoeff());
  double prev = -1.0;
  for (std::size_t j = 1; j < res.estimates.size(); ++j) {
    const double diff = (res.estimates[j] - res.estimates[j - 1]).cwiseAbs().maxCoeff();
    if (prev >= 0.0 && diff > std::max(floor, opts.divergence_factor * prev)) res.converged = false;
    prev = diff;
  }
  if (opts.extrapolate && res.converged && res.estimates.size() > 1) {
    res.estimate = neville_at_zero(res.deltas, res.estimates);
    res.extrapolated = true;
  } else {
    res.estimate = res.estimates.back();
  }
  return res;
}

ProbeResult probe(const EllipticSystem& sys, const Point& x0, int ktilde, int ltilde, const ProbeOptions& opts) {
  return probe(evaluator_for(sys), sys.box, sys.m, x0, ktilde, ltilde, opts);
}

OffdiagExtraction extract_offdiag_2d(const FormEvaluator& form, const Box& box, int m, BoundaryCondition bc,
                                     double tol) {
  if (box.dim() != 2) throw ArgumentError("extract_offdiag_2d: requires d = 2");
  if (bc == BoundaryCondition::Dirichlet)
    throw ContractError("extract_offdiag_2d: the antisymmetric part is invisible on H^1_0; use Free bc");
  const Interval& s1 = box.sides[0];
  const Interval& s2 = box.sides[1];
  const double vol = box.volume();
  const double c1 = 0.5 * (s1.lo + s1.hi);
  const double c2 = 0.5 * (s2.lo + s2.hi);

  // a(phi(x_b) (x) f, psi(x_a) (x) g) = int (C_ab f, g) phi'(x_b) psi'(x_a) for tests
  // depending on one coordinate each.
  auto moment = [&](int a, const Piecewise1D& psi_a, const Piecewise1D& phi_b) {
    const int b = 1 - a;
    std::vector<Piecewise1D> fphi(2), fpsi(2);
    fphi[static_cast<std::size_t>(b)] = phi_b;
    fphi[static_cast<std::size_t>(a)] = linear_on(box.sides[static_cast<std::size_t>(a)], 1.0, 0.0);
    fpsi[static_cast<std::size_t>(a)] = psi_a;
    fpsi[static_cast<std::size_t>(b)] = linear_on(box.sides[static_cast<std::size_t>(b)], 1.0, 0.0);
    const auto phi = TensorTestFunction::product(1.0, fphi);
    const auto psi = TensorTestFunction::product(1.0, fpsi);
    CMatrix out(m, m);
    for (int i = 0; i < m; ++i)
      for (int j = 0; j < m; ++j) out(i, j) = form(phi, unit(m, j), psi, unit(m, i));
    return out;
  };
  // a = 0 gives C_12 moments, a = 1 gives C_21 moments.
  const CMatrix i12 = moment(0, linear_on(s1, 0, 1), linear_on(s2, 0, 1));
  const CMatrix i21 = moment(1, linear_on(s2, 0, 1), linear_on(s1, 0, 1));
  const CMatrix i12_x1 = moment(0, quadratic_on(s1), linear_on(s2, 0, 1));
  const CMatrix i12_x2 = moment(0, linear_on(s1, 0, 1), quadratic_on(s2));
  const CMatrix i21_x1 = moment(1, linear_on(s2, 0, 1), quadratic_on(s1));
  const CMatrix i21_x2 = moment(1, quadratic_on(s2), linear_on(s1, 0, 1));

  OffdiagExtraction out;
  out.c12_average = i12 / vol;
  out.c21_average = i21 / vol;
  out.antisymmetric_average = 0.5 * (out.c12_average - out.c21_average);
  const CMatrix a_int = 0.5 * (i12 - i21);
  const CMatrix m1 = 0.5 * (i12_x1 - i21_x1) - c1 * a_int;
  const CMatrix m2 = 0.5 * (i12_x2 - i21_x2) - c2 * a_int;
  out.moment_residual = std::max(m1.cwiseAbs().maxCoeff() / (vol * 0.5 * s1.length()),
                                 m2.cwiseAbs().maxCoeff() / (vol * 0.5 * s2.length()));
  out.antisymmetric_constant =
      out.moment_residual <= tol * (1.0 + out.antisymmetric_average.cwiseAbs().maxCoeff());
  if (out.antisymmetric_constant) {
    const ProbeResult p = probe(form, box, m, {c1, c2}, 0, 1);
    out.c12 = 0.5 * p.estimate + out.antisymmetric_average;
  } else {
    out.c12 = out.c12_average;
  }
  return out;
}

std::string to_string(Decision d) {
  switch (d) {
    case Decision::PositiveDecoupled: return "POSITIVE-DECOUPLED";
    case Decision::NotPositive: return "NOT-POSITIVE";
    case Decision::Indeterminate: return "INDETERMINATE";
  }
  return "?";
}

std::vector<Point> default_probe_points(const EllipticSystem& sys) {
  for (const auto& f : sys.coeffs)
    if (f.kind() == FieldKind::GridSampled) {
      std::vector<Point> pts;
      for (int c = 0; c < f.cell_count(); ++c) pts.push_back(f.cell_center(c));
      std::sort(pts.begin(), pts.end());
      return pts;
    }
  const int d = sys.dim();
  static constexpr double rel[3] = {0.25, 0.5, 0.75};
  std::vector<Point> pts;
  int total = 1;
  for (int i = 0; i < d; ++i) total *= 3;
  for (int idx = 0; idx < total; ++idx) {
    Point x(static_cast<std::size_t>(d));
    int r = idx;
    for (int i = d - 1; i >= 0; --i) {
      const auto& s = sys.box.sides[static_cast<std::size_t>(i)];
      x[static_cast<std::size_t>(i)] = s.lo + rel[r % 3] * s.length();
      r /= 3;
    }
    pts.push_back(std::move(x));
  }
  return pts;
}

EllipticSystem scalar_system(const EllipticSystem& sys, int n) {
  if (n < 0 || n >= sys.m) throw ArgumentError("scalar_system: channel out of range");
  EllipticSystem s;
  s.box = sys.box;
  s.m = 1;
  s.bc = sys.bc;
  s.mu = sys.mu;
  for (const auto& f : sys.coeffs)
    s.coeffs.push_back(f.transformed([n](const CMatrix& c) {
      CMatrix r(1, 1);
      r(0, 0) = c(n, n).real();
      return r;
    }));
  return s;
}

Witness construct_witness(const EllipticSystem& sys, const Point& x0, int ktilde, int ltilde, const CMatrix& Q,
                          double delta, double tol) {
  const int d = sys.dim();
  check_indices(ktilde, ltilde, d);
  if (tol <= 0.0) tol = default_mult_tol(Q);
  const auto mw = find_witness(Q, tol);
  if (!mw) throw ContractError("construct_witness: the symmetrized matrix is diagonal, no witness exists");
  if (std::abs(mw->pairing.imag()) > tol) throw ContractError("construct_witness: the symmetrized matrix is not real");
  const double tau = mw->pairing.real();
  const TestPair pair = build_test_pair(ktilde == ltilde ? 2.0 * tau : tau, ktilde, ltilde, d);

  double dl = delta > 0.0 ? delta : default_delta(sys.box, x0);
  check_delta(sys.box, x0, dl);

  Witness w;
  w.kind = "lattice";
  w.source = "probe";
  w.x0 = x0;
  w.ktilde = ktilde;
  w.ltilde = ltilde;
  w.mult = *mw;
  w.pair = pair;
  w.f = mw->f.cast<cplx>();
  w.g = CVector::Zero(sys.m);
  for (int b : mw->B) w.g(b) = 1.0;
  for (int step = 0; step <= 40; ++step) {
    w.u_plus = pair.phi.dilated(x0, dl);
    w.u_minus = pair.psi.dilated(x0, dl);
    w.value = form_value(sys, w.u_plus, w.f, w.u_minus, w.g);
    w.bound = 0.5 * std::pow(dl, d - 2) * tau * tau;
    w.delta = dl;
    w.steps = step;
    if (w.value.real() > w.bound) return w;
    dl *= 0.5;
  }
  throw NumericalError("witness not localized at " + format_point(x0) + "; try another probe point");
}

namespace {

Witness reality_witness(const EllipticSystem& sys, const Point& x0, int kt, int lt, int i, int j, double im) {
  const int d = sys.dim();
  const TestPair pair = build_test_pair(probe_tau(kt, lt), kt, lt, d);
  double dl = default_delta(sys.box, x0);
  Witness w;
  w.kind = "reality";
  w.source = "probe";
  w.x0 = x0;
  w.ktilde = kt;
  w.ltilde = lt;
  w.pair = pair;
  w.f = unit(sys.m, j);
  w.g = unit(sys.m, i);
  w.mult.f = RVector::Unit(sys.m, j);
  w.mult.B = {i};
  w.mult.pairing = cplx(0.0, im);
  for (int step = 0; step <= 40; ++step) {
    w.u_plus = pair.phi.dilated(x0, dl);
    w.u_minus = pair.psi.dilated(x0, dl);
    w.value = form_value(sys, w.u_plus, w.f, w.u_minus, w.g);
    w.bound = 0.5 * std::pow(dl, d - 2) * std::abs(im);
    w.delta = dl;
    w.steps = step;
    if (std::abs(w.value.imag()) > w.bound) return w;
    dl *= 0.5;
  }
  throw NumericalError("reality witness not localized at " + format_point(x0));
}

Witness grid_witness(const EllipticSystem& sys, const Grid& grid, const std::string& kind, int row, int col,
                     double bound) {
  const int m = sys.m;
  const int p = row / m, i = row % m, q = col / m, j = col % m;
  Witness w;
  w.kind = kind;
  w.source = "grid";
  w.x0 = grid.node_coordinates(q);
  w.u_plus = grid.basis_function(q);
  w.f = unit(m, j);
  w.u_minus = grid.basis_function(p);
  w.g = unit(m, i);
  w.mult.f = RVector::Unit(m, j);
  w.mult.B = {i};
  w.value = form_value(sys, w.u_plus, w.f, w.u_minus, w.g);
  w.mult.pairing = w.value;
  w.delta = grid.spacing(0);
  w.bound = bound;
  return w;
}

}  // namespace

Verdict decide_decoupling(const EllipticSystem& sys, const DecisionOptions& opts) {
  sys.validate();
  const int d = sys.dim();
  const int m = sys.m;
  Verdict v;
  v.bound = sys.bound();
  v.tol = opts.tol > 0.0 ? opts.tol : 1e-8 * std::max(1.0, v.bound);
  v.ellipticity = check_ellipticity(sys);
  v.probe_points = opts.probe_points.empty() ? default_probe_points(sys) : opts.probe_points;
  std::ostringstream diag;
  if (!v.ellipticity.pass)
    diag << "ellipticity: lambda_min " << v.ellipticity.lambda_min << " below declared mu " << sys.mu << "\n";

  std::vector<std::pair<int, int>> pairs;
  for (int k = 0; k < d; ++k)
    for (int l = k; l < d; ++l) pairs.emplace_back(k, l);

  // Symmetrized matrices per point, computed in parallel, scanned in order.
  const int npts = static_cast<int>(v.probe_points.size());
  auto chunks = parallel_map_chunks(npts, opts.threads, [&](int b, int e) {
    std::vector<std::pair<CMatrix, std::optional<ProbeResult>>> out;
    for (int pi = b; pi < e; ++pi)
      for (const auto& [k, l] : pairs) {
        const Point& x = v.probe_points[static_cast<std::size_t>(pi)];
        if (opts.use_probe) {
          ProbeResult r = probe(sys, x, k, l, opts.probe);
          CMatrix est = r.estimate;
          out.emplace_back(std::move(est), std::move(r));
        } else {
          out.emplace_back(symmetrized(sys, k, l, x), std::nullopt);
        }
      }
    return out;
  });
  std::vector<CMatrix> S;
  bool any_converged = !opts.use_probe;
  for (auto& ch : chunks)
    for (auto& [mat, pr] : ch) {
      S.push_back(std::move(mat));
      if (pr) {
        any_converged = any_converged || pr->converged;
        v.probes.push_back(std::move(*pr));
      }
    }
  if (!any_converged) {
    v.decision = Decision::Indeterminate;
    diag << "probe: no delta schedule converged\n";
    v.diagnostics = diag.str();
    return v;
  }

  std::size_t idx = 0;
  bool failed = false;
  for (int pi = 0; pi < npts; ++pi)
    for (const auto& [k, l] : pairs) {
      const CMatrix& Sx = S[idx++];
      const Point& x = v.probe_points[static_cast<std::size_t>(pi)];
      const double imag = Sx.imag().cwiseAbs().maxCoeff();
      const CMatrix Q = Sx.real().cast<cplx>();
      const bool real_ok = imag <= v.tol;
      const bool diag_ok = is_multiplication(Q, v.tol);
      if (real_ok && diag_ok) continue;
      failed = true;
      if (v.witness) continue;
      try {
        if (!real_ok) {
          int bi = 0, bj = 0;
          Sx.imag().cwiseAbs().maxCoeff(&bi, &bj);
          v.witness = reality_witness(sys, x, k, l, bi, bj, Sx(bi, bj).imag());
        } else {
          v.witness = construct_witness(sys, x, k, l, Q, 0.0, v.tol);
        }
      } catch (const Error& e) {
        diag << "witness at " << format_point(x) << ": " << e.what() << "\n";
      }
    }
  if (failed) {
    v.decision = v.witness ? Decision::NotPositive : Decision::Indeterminate;
    v.diagnostics = diag.str();
    return v;
  }

  // Symmetrized parts are real and diagonal at every point: extract c^(n).
  for (int n = 0; n < m; ++n) v.scalar_systems.push_back(scalar_system(sys, n));
  v.scalar_lambda_min = std::numeric_limits<double>::infinity();
  for (const auto& x : v.probe_points) {
    ScalarSample s;
    s.x = x;
    for (int n = 0; n < m; ++n) {
      RMatrix c(d, d);
      for (int k = 0; k < d; ++k)
        for (int l = 0; l < d; ++l) c(k, l) = sys.C(k, l).eval(x)(n, n).real();
      v.scalar_bound = std::max(v.scalar_bound, c.cwiseAbs().maxCoeff());
      const double lm = hermitian_min_eigenvalue(c.cast<cplx>());
      v.scalar_lambda_min = std::min(v.scalar_lambda_min, lm);
      s.c.push_back(std::move(c));
      s.lambda_min.push_back(lm);
    }
    v.samples.push_back(std::move(s));
  }

  // The remainder C_kl - diag(c_kl) must not contribute to the form on V.
  if (opts.null_check) {
    EllipticSystem rem = sys;
    bool nonzero = false;
    for (auto& f : rem.coeffs) {
      f = f.transformed([](const CMatrix& c) {
        CMatrix r = c;
        for (int n = 0; n < r.rows(); ++n) r(n, n) -= c(n, n).real();
        return r;
      });
      const auto& vals = f.kind() == FieldKind::GridSampled ? f.cell_values() : std::vector<CMatrix>{};
      if (f.kind() == FieldKind::GridSampled) {
        for (const auto& c : vals) nonzero = nonzero || c.cwiseAbs().maxCoeff() > 0.0;
      } else {
        for (const auto& t : f.terms()) nonzero = nonzero || t.coef.cwiseAbs().maxCoeff() > 0.0;
      }
    }
    if (nonzero) {
      std::vector<int> cells(static_cast<std::size_t>(d), opts.null_check_cells);
      for (const auto& f : sys.coeffs)
        if (f.kind() == FieldKind::GridSampled) {
          cells = f.cells();
          break;
        }
      const Grid grid(sys.box, cells, sys.bc);
      const DiscreteForm form = assemble(rem, grid, {opts.threads});
      double hmax = 0.0;
      for (int i = 0; i < d; ++i) hmax = std::max(hmax, grid.spacing(i));
      v.remainder_threshold = v.tol * std::pow(hmax, d - 2);
      v.remainder_norm = max_abs(form.K);
      if (v.remainder_norm > v.remainder_threshold) {
        int br = -1, bc = -1, ir = -1, ic = -1;
        double best_re = 0.0, best_im = 0.0;
        for (int r = 0; r < form.K.outerSize(); ++r)
          for (SparseC::InnerIterator it(form.K, r); it; ++it) {
            const cplx val = it.value();
            if (it.row() % m != it.col() % m && val.real() > best_re) {
              best_re = val.real();
              br = static_cast<int>(it.row());
              bc = static_cast<int>(it.col());
            }
            if (std::abs(val.imag()) > best_im) {
              best_im = std::abs(val.imag());
              ir = static_cast<int>(it.row());
              ic = static_cast<int>(it.col());
            }
          }
        const double half = 0.5 * v.remainder_threshold;
        if (best_re > half)
          v.witness = grid_witness(sys, grid, "lattice", br, bc, half);
        else if (best_im > half)
          v.witness = grid_witness(sys, grid, "reality", ir, ic, half);
        if (v.witness) {
          v.decision = Decision::NotPositive;
          v.scalar_systems.clear();
          v.samples.clear();
          diag << "remainder: max |K| " << v.remainder_norm << " exceeds " << v.remainder_threshold << "\n";
          v.diagnostics = diag.str();
          return v;
        }
        diag << "remainder: nonzero but no witness above threshold\n";
        v.decision = Decision::Indeterminate;
        v.diagnostics = diag.str();
        return v;
      }
    }
  }

  v.decision = Decision::PositiveDecoupled;
  v.diagnostics = diag.str();
  return v;
}

double form_criterion_state(const DiscreteForm& form, const RVector& u) {
  if (imaginary_norm(form.K) > 1e-12 * std::max(1.0, max_abs(form.K)))
    throw ContractError("form criterion: the form is not real");
  if (u.size() != form.size()) throw ArgumentError("form criterion: state size mismatch");
  const RVector up = u.cwiseMax(0.0);
  const RVector um = (-u).cwiseMax(0.0);
  const CVector Ku = form.K * up.cast<cplx>();
  return (um.cast<cplx>().transpose() * Ku)(0).real();
}

double form_criterion_sample(const DiscreteForm& form, int count, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double best = -std::numeric_limits<double>::infinity();
  for (int s = 0; s < count; ++s) {
    RVector u(form.size());
    for (int i = 0; i < u.size(); ++i) u(i) = normal(rng);
    best = std::max(best, form_criterion_state(form, u));
  }
  return best;
}

RVector witness_state(const Witness& w, const Grid& grid) {
  const auto m = w.f.size();
  RVector u(grid.node_count() * m);
  for (int p = 0; p < grid.node_count(); ++p) {
    const Point x = grid.node_coordinates(p);
    const double a = w.u_plus(x);
    const double b = w.u_minus(x);
    for (Eigen::Index i = 0; i < m; ++i) u(p * m + i) = a * w.f(i).real() - b * w.g(i).real();
  }
  return u;
}

cplx reevaluate_witness(const EllipticSystem& sys, const Witness& w) {
  return form_value(sys, w.u_plus, w.f, w.u_minus, w.g);
}

}  // namespace posilab
