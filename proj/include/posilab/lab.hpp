#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "posilab/assembly.hpp"
#include "posilab/multop.hpp"
#include "posilab/test_functions.hpp"

namespace posilab {

/// Black-box evaluator of a(phi (x) f, psi (x) g).
using FormEvaluator = std::function<cplx(const TensorTestFunction& phi, const CVector& f,
                                         const TensorTestFunction& psi, const CVector& g)>;

/// Exact evaluator backed by form_value.
FormEvaluator evaluator_for(const EllipticSystem& sys, int gauss_order = kDefaultGaussOrder);

struct ProbeOptions {
  double delta_max = 0.0;  // <= 0: min(1, distance from x0 to the boundary)
  int levels = 7;          // delta_j = delta_max 2^-j
  bool extrapolate = true;
  /// A successive difference above this multiple of the previous one flags
  /// the schedule as non-convergent.
  double divergence_factor = 0.75;
};

struct ProbeResult {
  Point x0;
  int ktilde = 0;
  int ltilde = 0;
  CMatrix estimate;                // (i,j) = ((C_kl + C_lk)(x0) e_j, e_i)
  std::vector<double> deltas;
  std::vector<CMatrix> estimates;  // one per delta
  bool extrapolated = false;
  bool converged = true;
};

/// Recovers C_kl + C_lk at x0 from form values on scaled tent pairs.
ProbeResult probe(const FormEvaluator& form, const Box& domain, int m, const Point& x0, int ktilde, int ltilde,
                  const ProbeOptions& opts = {});
ProbeResult probe(const EllipticSystem& sys, const Point& x0, int ktilde, int ltilde, const ProbeOptions& opts = {});

/// Full-space (Free) recovery of C_12 in d = 2 via affine tests.
struct OffdiagExtraction {
  CMatrix c12_average;            // (1/|box|) int C_12
  CMatrix c21_average;
  CMatrix antisymmetric_average;  // (C_12 - C_21)/2 averaged
  CMatrix c12;                    // constant part when the antisymmetric part is constant, else the average
  bool antisymmetric_constant = true;
  double moment_residual = 0.0;   // largest first moment of the antisymmetric part
};

OffdiagExtraction extract_offdiag_2d(const FormEvaluator& form, const Box& box, int m, BoundaryCondition bc,
                                     double tol = 1e-8);

enum class Decision { PositiveDecoupled, NotPositive, Indeterminate };
std::string to_string(Decision d);

/// u+ = phi (x) f and u- = psi (x) g with disjoint channel supports.
struct Witness {
  std::string kind;  // "lattice" or "reality"
  std::string source;  // "probe" (scaled tents at a point) or "grid" (nodal hats)
  Point x0;
  int ktilde = 0;
  int ltilde = 0;
  MultWitness mult;
  std::optional<TestPair> pair;
  double delta = 0.0;
  TensorTestFunction u_plus;
  CVector f;
  TensorTestFunction u_minus;
  CVector g;
  cplx value;
  /// a(u+,u-) must exceed this (for reality witnesses, |Im a| must).
  double bound = 0.0;
  int steps = 0;
};

/// Per-point table of extracted scalar coefficients c^(n)_kl(x).
struct ScalarSample {
  Point x;
  std::vector<RMatrix> c;  // c[n](k,l)
  std::vector<double> lambda_min;
};

struct DecisionOptions {
  std::vector<Point> probe_points;  // empty: default set
  double tol = 0.0;                 // <= 0: 1e-8 max(1, M)
  bool use_probe = false;
  ProbeOptions probe;
  int null_check_cells = 8;
  bool null_check = true;
  int threads = 1;
};

struct Verdict {
  Decision decision = Decision::Indeterminate;
  std::vector<EllipticSystem> scalar_systems;  // POSITIVE-DECOUPLED only
  std::vector<ScalarSample> samples;
  std::optional<Witness> witness;  // NOT-POSITIVE only
  double tol = 0.0;
  double bound = 0.0;              // M of the input system
  double scalar_bound = 0.0;       // max |c^(n)_kl| over samples
  double scalar_lambda_min = 0.0;  // min pointwise ellipticity of the scalar systems
  EllipticityReport ellipticity;
  double remainder_norm = 0.0;     // max |K| of the non-decoupled remainder
  double remainder_threshold = 0.0;
  std::vector<Point> probe_points;
  std::vector<ProbeResult> probes;
  std::string diagnostics;
};

/// Relative coordinates {1/4, 1/2, 3/4}^d, or every cell centre of a
/// GridSampled coefficient when one is present.
std::vector<Point> default_probe_points(const EllipticSystem& sys);

/// Channel n scalar system c^(n)_kl = Re (C_kl)_nn.
EllipticSystem scalar_system(const EllipticSystem& sys, int n);

Verdict decide_decoupling(const EllipticSystem& sys, const DecisionOptions& opts = {});

/// Lattice witness from a non-diagonal real symmetrized matrix Q at x0.
/// Shrinks delta by half (at most 40 times) until a(u+,u-) > delta^{d-2} tau^2 / 2.
Witness construct_witness(const EllipticSystem& sys, const Point& x0, int ktilde, int ltilde, const CMatrix& Q,
                          double delta = 0.0, double tol = 0.0);

/// Re (u-)^T K u+ for the entrywise split of a real state.
double form_criterion_state(const DiscreteForm& form, const RVector& u);
/// Maximum of form_criterion_state over `count` Gaussian random states.
double form_criterion_sample(const DiscreteForm& form, int count, std::uint64_t seed);

/// The witness pair sampled at grid nodes (u+ minus u-).
RVector witness_state(const Witness& w, const Grid& grid);

/// Re-evaluates the witness with exact quadrature.
cplx reevaluate_witness(const EllipticSystem& sys, const Witness& w);

}  // namespace posilab
