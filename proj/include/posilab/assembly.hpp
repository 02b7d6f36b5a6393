#pragma once

#include <iosfwd>
#include <vector>

#include <Eigen/SparseCore>

#include "posilab/coefficients.hpp"
#include "posilab/multop.hpp"
#include "posilab/test_functions.hpp"

namespace posilab {

using SparseC = Eigen::SparseMatrix<cplx, Eigen::RowMajor>;

/// Uniform tensor grid carrying Q1 nodal basis functions. Nodes are numbered
/// lexicographically with axis 0 fastest; Dirichlet grids drop boundary nodes.
class Grid {
 public:
  Grid() = default;
  Grid(Box box, std::vector<int> cells, BoundaryCondition bc);
  static Grid uniform(const Box& box, int n, BoundaryCondition bc);

  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }
  const std::vector<int>& cells() const { return cells_; }
  BoundaryCondition bc() const { return bc_; }
  double spacing(int axis) const;

  int node_count() const { return static_cast<int>(active_to_lattice_.size()); }
  int cell_count() const;
  /// Active node index for a lattice multi-index, or -1 for a removed boundary node.
  int active_index(const std::vector<int>& lattice) const;
  std::vector<int> lattice_of(int node) const;
  Point node_coordinates(int node) const;
  /// Integral of the node's basis function (lumped mass).
  double node_weight(int node) const;

  std::vector<int> cell_lattice(int cell) const;
  Box cell_box(int cell) const;
  std::vector<Point> cell_centers() const;
  /// The nodal hat b_p as a tensor test function.
  TensorTestFunction basis_function(int node) const;

 private:
  Box box_;
  std::vector<int> cells_;
  BoundaryCondition bc_ = BoundaryCondition::Dirichlet;
  std::vector<int> lattice_to_active_;
  std::vector<int> active_to_lattice_;
};

/// Galerkin stiffness K[(p,i),(q,j)] = a(b_q e_j, b_p e_i) and lumped mass,
/// node-major / channel-minor.
struct DiscreteForm {
  Grid grid;
  int m = 1;
  SparseC K;
  RVector mass;  // per node

  int size() const { return grid.node_count() * m; }
  int index(int node, int channel) const { return node * m + channel; }
  /// Dense channel block K^{ij}_{pq}.
  CMatrix channel_block(int i, int j) const;
};

struct AssemblyOptions {
  int threads = 1;
  int gauss_order = kDefaultGaussOrder;
};

/// Exact for Constant and PolynomialEntries coefficients; GridSampled fields
/// use the coefficient value at each grid cell centre.
DiscreteForm assemble(const EllipticSystem& sys, const Grid& grid, const AssemblyOptions& opts = {});

/// a(phi (x) f, psi (x) g) evaluated with exact quadrature over the box.
cplx form_value(const EllipticSystem& sys, const TensorTestFunction& phi, const CVector& f,
                const TensorTestFunction& psi, const CVector& g, int gauss_order = kDefaultGaussOrder);

/// |int (B d_l u, d_k v) - int (B d_k u, d_l v)| on the Q1 interpolants. Dirichlet only.
double commutation_residual(const Grid& grid, const OperatorMatrix& B, const CVector& u, const CVector& v, int k,
                            int l);

/// Nodal interpolant of phi (x) f on the grid.
CVector interpolate(const Grid& grid, const TensorTestFunction& phi, const CVector& f);

/// Largest |imag| over the stiffness entries.
double imaginary_norm(const SparseC& K);
double max_abs(const SparseC& K);

/// Matrix Market coordinate file, 1-based `row col re im` lines.
void write_matrix_market(std::ostream& os, const SparseC& K);
SparseC read_matrix_market(std::istream& is);

}  // namespace posilab
