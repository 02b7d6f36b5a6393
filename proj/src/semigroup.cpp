#include "posilab/semigroup.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include <unsupported/Eigen/MatrixFunctions>

#include "posilab/parallel.hpp"

namespace posilab {

namespace {

double sparse_norm1(const SparseC& A) {
  RVector colsum = RVector::Zero(A.cols());
  for (int r = 0; r < A.outerSize(); ++r)
    for (SparseC::InnerIterator it(A, r); it; ++it) colsum(it.col()) += std::abs(it.value());
  return A.cols() ? colsum.maxCoeff() : 0.0;
}

bool sparse_finite(const SparseC& A) {
  for (int r = 0; r < A.outerSize(); ++r)
    for (SparseC::InnerIterator it(A, r); it; ++it)
      if (!std::isfinite(it.value().real()) || !std::isfinite(it.value().imag())) return false;
  return true;
}

void finish(GeneratorOperator& g) {
  if (!sparse_finite(g.A)) throw NumericalError("generator has non-finite entries");
  g.norm1 = sparse_norm1(g.A);
  g.real = imaginary_norm(g.A) <= GeneratorOperator::kRealTol * std::max(1.0, max_abs(g.A));
}

}  // namespace

GeneratorOperator GeneratorOperator::from_form(const DiscreteForm& form) {
  GeneratorOperator g;
  g.weights.resize(form.size());
  for (int p = 0; p < form.grid.node_count(); ++p)
    for (int i = 0; i < form.m; ++i) g.weights(form.index(p, i)) = form.mass(p);
  g.A = g.weights.cwiseInverse().cast<cplx>().asDiagonal() * form.K;
  g.A.makeCompressed();
  finish(g);
  return g;
}

GeneratorOperator GeneratorOperator::from_dense(const CMatrix& A) {
  if (A.rows() != A.cols()) throw ArgumentError("generator must be square");
  GeneratorOperator g;
  g.A = A.sparseView(0.0, 0.0);
  g.A.makeCompressed();
  g.weights = RVector::Ones(A.rows());
  finish(g);
  return g;
}

CMatrix expm_dense(const GeneratorOperator& A, double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("expm: t must be positive");
  if (A.size() > kDenseExpmLimit) throw CapacityError("expm_dense: matrix too large for the dense path");
  CMatrix E;
  if (A.real) {
    const RMatrix B = -t * RMatrix(CMatrix(A.A).real());
    E = RMatrix(B.exp()).cast<cplx>();
  } else {
    const CMatrix B = -t * CMatrix(A.A);
    E = B.exp();
  }
  if (!E.allFinite()) throw NumericalError("expm: non-finite result");
  return E;
}

CVector expm_apply(const GeneratorOperator& A, double t, const CVector& u) {
  if (u.size() != A.size()) throw ArgumentError("expm_apply: state size mismatch");
  if (!u.allFinite()) throw NumericalError("expm_apply: non-finite state");
  if (A.size() <= kDenseExpmLimit) return expm_dense(A, t) * u;
  if (!(t > 0.0) || !std::isfinite(t)) throw ArgumentError("expm: t must be positive");

  // exp(-tA) = (exp(-tA/s))^s with ||tA/s||_1 <= 1, each factor by Taylor.
  const double tn = t * A.norm1;
  const auto steps = static_cast<long>(std::max(1.0, std::ceil(tn)));
  const double h = t / static_cast<double>(steps);
  CVector v = u;
  for (long s = 0; s < steps; ++s) {
    CVector term = v;
    CVector acc = v;
    for (int k = 1; k <= 60; ++k) {
      term = (A.A * term) * (-h / k);
      acc += term;
      if (term.cwiseAbs().maxCoeff() <= 1e-17 * acc.cwiseAbs().maxCoeff()) break;
    }
    v = std::move(acc);
    if (!v.allFinite()) throw NumericalError("expm_apply: non-finite iterate");
  }
  return v;
}

std::string to_string(PositivityVerdict v) {
  switch (v) {
    case PositivityVerdict::NegativeFound: return "NEGATIVE-FOUND";
    case PositivityVerdict::SignPatternOk: return "SIGN-PATTERN-OK";
    case PositivityVerdict::SampledNonnegative: return "SAMPLED-NONNEGATIVE";
  }
  return "?";
}

std::vector<double> default_times(const GeneratorOperator& A) {
  const double s = 1.0 / std::max(A.norm1, 1.0);
  return {1e-2 * s, 1e-1 * s, s};
}

PositivityReport positivity_scan(const GeneratorOperator& A, const std::vector<double>& times,
                                 const ScanOptions& opts) {
  if (times.empty()) throw ArgumentError("positivity_scan: no times given");
  for (double t : times)
    if (!(t > 0.0)) throw ArgumentError("positivity_scan: times must be positive");

  PositivityReport rep;
  rep.min_entry = std::numeric_limits<double>::infinity();
  const double amax = max_abs(A.A);
  for (int r = 0; r < A.A.outerSize(); ++r)
    for (SparseC::InnerIterator it(A.A, r); it; ++it) {
      rep.max_imag = std::max(rep.max_imag, std::abs(it.value().imag()));
      if (it.row() != it.col()) rep.max_positive_offdiag = std::max(rep.max_positive_offdiag, it.value().real());
    }
  rep.real = A.real;

  const int n = A.size();
  for (double t : times) {
    // Columns exp(-tA) e_j, computed in parallel and reduced in index order.
    CMatrix E;
    if (n <= kDenseExpmLimit) {
      E = expm_dense(A, t);
    } else {
      auto parts = parallel_map_chunks(n, opts.threads, [&](int b, int e) {
        CMatrix cols(n, e - b);
        for (int j = b; j < e; ++j) cols.col(j - b) = expm_apply(A, t, CVector::Unit(n, j));
        return cols;
      });
      E.resize(n, n);
      int c = 0;
      for (auto& p : parts) {
        E.middleCols(c, p.cols()) = p;
        c += static_cast<int>(p.cols());
      }
    }
    PositivityRow row;
    row.t = t;
    row.scale = E.cwiseAbs().maxCoeff();
    row.tol = opts.rel_tol * row.scale;
    row.min_entry = std::numeric_limits<double>::infinity();
    Offender worst;
    for (int j = 0; j < n; ++j)
      for (int i = 0; i < n; ++i) {
        const double v = E(i, j).real();
        if (v < row.min_entry) {
          row.min_entry = v;
          worst = {t, v, i, j};
        }
        if (v < -row.tol) ++row.negatives;
      }
    if (row.negatives > 0 && (!rep.offender || worst.value < rep.offender->value)) rep.offender = worst;
    rep.min_entry = std::min(rep.min_entry, row.min_entry);
    rep.rows.push_back(row);
  }

  const double gtol = opts.rel_tol * std::max(1.0, amax);
  if (rep.offender)
    rep.verdict = PositivityVerdict::NegativeFound;
  else if (rep.real && rep.max_positive_offdiag <= gtol)
    rep.verdict = PositivityVerdict::SignPatternOk;
  else
    rep.verdict = PositivityVerdict::SampledNonnegative;
  return rep;
}

double cross_channel_ratio(const DiscreteForm& form) {
  double cross = 0.0;
  for (int r = 0; r < form.K.outerSize(); ++r)
    for (SparseC::InnerIterator it(form.K, r); it; ++it)
      if (it.row() % form.m != it.col() % form.m) cross = std::max(cross, std::abs(it.value()));
  const double kmax = max_abs(form.K);
  return kmax > 0.0 ? cross / kmax : 0.0;
}

double factorization_residual(const DiscreteForm& form, const std::vector<DiscreteForm>& scalar_forms, double t,
                              const CVector& u) {
  const int m = form.m;
  if (static_cast<int>(scalar_forms.size()) != m) throw ArgumentError("factorization: one scalar form per channel");
  if (u.size() != form.size()) throw ArgumentError("factorization: state size mismatch");
  const double unorm = u.norm();
  if (unorm == 0.0) return 0.0;
  if (m == 1) return 0.0;
  if (cross_channel_ratio(form) > 1e-10) throw ContractError("factorization: the stiffness couples channels");

  const CVector full = expm_apply(GeneratorOperator::from_form(form), t, u);
  const int N = form.grid.node_count();
  CVector split(form.size());
  for (int n = 0; n < m; ++n) {
    const DiscreteForm& sf = scalar_forms[static_cast<std::size_t>(n)];
    if (sf.m != 1 || sf.grid.node_count() != N) throw ArgumentError("factorization: scalar form shape mismatch");
    CVector un(N);
    for (int p = 0; p < N; ++p) un(p) = u(form.index(p, n));
    const CVector sn = expm_apply(GeneratorOperator::from_form(sf), t, un);
    for (int p = 0; p < N; ++p) split(form.index(p, n)) = sn(p);
  }
  return (full - split).norm() / unorm;
}

double weighted_norm(const GeneratorOperator& A, const CVector& u) {
  return std::sqrt((A.weights.array() * u.cwiseAbs2().array()).sum());
}

}  // namespace posilab
