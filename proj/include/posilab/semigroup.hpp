#pragma once

#include <optional>
#include <vector>

#include "posilab/assembly.hpp"

namespace posilab {

/// A = Mass^{-1} K, the generator of S_t = exp(-tA).
struct GeneratorOperator {
  SparseC A;
  bool real = true;
  double norm1 = 0.0;  // max column sum, used as the spectral bound estimate
  RVector weights;     // per-dof lumped mass, all ones for toy generators

  int size() const { return static_cast<int>(A.rows()); }

  static GeneratorOperator from_form(const DiscreteForm& form);
  static GeneratorOperator from_dense(const CMatrix& A);
  /// Real-part tolerance used when deciding whether A is real.
  static constexpr double kRealTol = 1e-12;
};

/// Largest size handled by dense Pade scaling-and-squaring.
constexpr int kDenseExpmLimit = 4096;

/// exp(-tA) as a dense matrix; requires size() <= kDenseExpmLimit.
CMatrix expm_dense(const GeneratorOperator& A, double t);

/// exp(-tA) u. Dense Pade(13) scaling and squaring up to kDenseExpmLimit,
/// otherwise a scaled truncated Taylor series driven by sparse products.
CVector expm_apply(const GeneratorOperator& A, double t, const CVector& u);

enum class PositivityVerdict { NegativeFound, SignPatternOk, SampledNonnegative };
std::string to_string(PositivityVerdict v);

struct PositivityRow {
  double t = 0.0;
  double min_entry = 0.0;  // min over Re exp(-tA)
  double scale = 0.0;      // max |exp(-tA)|
  double tol = 0.0;
  int negatives = 0;
};

struct Offender {
  double t = 0.0;
  double value = 0.0;
  int row = 0;
  int col = 0;
};

struct PositivityReport {
  std::vector<PositivityRow> rows;
  double min_entry = 0.0;
  std::optional<Offender> offender;
  double max_positive_offdiag = 0.0;  // of Re A
  double max_imag = 0.0;              // max |Im A|
  bool real = true;
  PositivityVerdict verdict = PositivityVerdict::SampledNonnegative;
};

/// {1e-2, 1e-1, 1} / max(norm1(A), 1); a generator that vanishes up to
/// roundoff is not probed at huge times.
std::vector<double> default_times(const GeneratorOperator& A);

struct ScanOptions {
  double rel_tol = 1e-9;  // tolerance relative to max |exp(-tA)|
  int threads = 1;
};

PositivityReport positivity_scan(const GeneratorOperator& A, const std::vector<double>& times,
                                 const ScanOptions& opts = {});

/// ||S_t u - (S^(n)_t u_n)_n|| / ||u|| for a system whose stiffness couples no
/// two channels; scalar_systems[n] generates channel n. Throws ContractError
/// when K has cross-channel entries above 1e-10 max|K|.
double factorization_residual(const DiscreteForm& form, const std::vector<DiscreteForm>& scalar_forms, double t,
                              const CVector& u);

/// Largest cross-channel entry of K relative to max|K|.
double cross_channel_ratio(const DiscreteForm& form);

/// Mass-weighted norm sqrt(sum_w |u|^2).
double weighted_norm(const GeneratorOperator& A, const CVector& u);

}  // namespace posilab
