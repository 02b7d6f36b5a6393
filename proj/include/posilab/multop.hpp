#pragma once

#include <optional>
#include <vector>

#include "posilab/coefficients.hpp"

namespace posilab {

class Grid;

/// A bounded operator on C^m = L2({1..m}) with counting measure.
using OperatorMatrix = CMatrix;

/// Certificate that Q is not a multiplication operator: f >= 0 vanishes on B
/// and (Q f, 1_B) != 0.
struct MultWitness {
  RVector f;
  std::vector<int> B;  // 0-based channel indices
  cplx pairing;
};

/// 1e-9 * (1 + max |Q_ij|).
double default_mult_tol(const OperatorMatrix& Q);

// The three characterisations of multiplication operators on counting measure.
// They are computed independently and must agree.
bool offdiagonal_vanishes(const OperatorMatrix& Q, double tol);
bool commutes_with_indicators(const OperatorMatrix& Q, double tol);
bool dominated_on_basis(const OperatorMatrix& Q, double tol);

/// Q is diagonal up to tol. Throws ContractError if the three predicates
/// above disagree.
bool is_multiplication(const OperatorMatrix& Q, double tol);

/// First off-diagonal entry |Q_ij| > tol in row-major order, as f = e_j, B = {i}.
std::optional<MultWitness> find_witness(const OperatorMatrix& Q, double tol);

/// Diagonal part P(Q).
OperatorMatrix diag_projection(const OperatorMatrix& Q);

/// |Tr(S P(T)) - Tr(P(S) T)|.
double trace_duality_residual(const OperatorMatrix& S, const OperatorMatrix& T);

double operator_norm(const OperatorMatrix& Q);

/// is_multiplication at every cell centre of the grid.
bool lift_is_diagonal(const MatrixField& field, const Grid& grid, double tol);

}  // namespace posilab
