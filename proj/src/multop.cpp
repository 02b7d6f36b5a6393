#include "posilab/multop.hpp"

#include <Eigen/SVD>

#include "posilab/assembly.hpp"

namespace posilab {

double default_mult_tol(const OperatorMatrix& Q) {
  return 1e-9 * (1.0 + (Q.size() ? Q.cwiseAbs().maxCoeff() : 0.0));
}

bool offdiagonal_vanishes(const OperatorMatrix& Q, double tol) {
  for (Eigen::Index i = 0; i < Q.rows(); ++i)
    for (Eigen::Index j = 0; j < Q.cols(); ++j)
      if (i != j && std::abs(Q(i, j)) > tol) return false;
  return true;
}

bool commutes_with_indicators(const OperatorMatrix& Q, double tol) {
  // The indicator projections 1_A are generated by the rank-one 1_{i}.
  const Eigen::Index m = Q.rows();
  for (Eigen::Index i = 0; i < m; ++i) {
    CMatrix E = CMatrix::Zero(m, m);
    E(i, i) = 1.0;
    const CMatrix comm = Q * E - E * Q;
    if (comm.cwiseAbs().maxCoeff() > tol) return false;
  }
  return true;
}

bool dominated_on_basis(const OperatorMatrix& Q, double tol) {
  // |Q f| <= c |f| pointwise with c = max |Q_jj|; for f = e_j this says
  // (Q e_j) is supported in supp e_j.
  const Eigen::Index m = Q.rows();
  double c = 0.0;
  for (Eigen::Index j = 0; j < m; ++j) c = std::max(c, std::abs(Q(j, j)));
  for (Eigen::Index j = 0; j < m; ++j) {
    const CVector col = Q.col(j);
    for (Eigen::Index i = 0; i < m; ++i) {
      const double allowed = (i == j ? c : 0.0) + tol;
      if (std::abs(col(i)) > allowed) return false;
    }
  }
  return true;
}

bool is_multiplication(const OperatorMatrix& Q, double tol) {
  if (Q.rows() != Q.cols()) throw ArgumentError("operator matrix must be square");
  const bool a = offdiagonal_vanishes(Q, tol);
  const bool b = commutes_with_indicators(Q, tol);
  const bool c = dominated_on_basis(Q, tol);
  if (a != b || a != c) throw ContractError("multiplication-operator predicates disagree");
  return a;
}

std::optional<MultWitness> find_witness(const OperatorMatrix& Q, double tol) {
  const Eigen::Index m = Q.rows();
  for (Eigen::Index i = 0; i < m; ++i)
    for (Eigen::Index j = 0; j < m; ++j)
      if (i != j && std::abs(Q(i, j)) > tol) {
        MultWitness w;
        w.f = RVector::Zero(m);
        w.f(j) = 1.0;
        w.B = {static_cast<int>(i)};
        w.pairing = Q(i, j);  // (Q e_j, e_i)
        return w;
      }
  return std::nullopt;
}

OperatorMatrix diag_projection(const OperatorMatrix& Q) {
  OperatorMatrix P = OperatorMatrix::Zero(Q.rows(), Q.cols());
  P.diagonal() = Q.diagonal();
  return P;
}

double trace_duality_residual(const OperatorMatrix& S, const OperatorMatrix& T) {
  if (S.rows() != T.rows() || S.cols() != T.cols()) throw ArgumentError("trace duality: size mismatch");
  return std::abs((S * diag_projection(T)).trace() - (diag_projection(S) * T).trace());
}

double operator_norm(const OperatorMatrix& Q) {
  if (Q.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(Q);
  return svd.singularValues()(0);
}

bool lift_is_diagonal(const MatrixField& field, const Grid& grid, double tol) {
  for (const auto& x : grid.cell_centers())
    if (!is_multiplication(field.eval(x), tol)) return false;
  return true;
}

}  // namespace posilab
