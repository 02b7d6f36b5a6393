#pragma once

#include <functional>
#include <vector>

#include "posilab/common.hpp"

namespace posilab {

/// One term c * x_1^e_1 ... x_d^e_d of a scalar multivariate polynomial.
struct PolyTerm {
  std::vector<int> exps;
  cplx coef;
};
using Polynomial = std::vector<PolyTerm>;

cplx evaluate(const Polynomial& p, const Point& x);
int total_degree(const std::vector<int>& exps);

/// Matrix-valued monomial term x^exps * coef.
struct MatrixTerm {
  std::vector<int> exps;
  CMatrix coef;
};

enum class FieldKind { Constant, PolynomialEntries, GridSampled };
std::string to_string(FieldKind k);

/// A map x -> C(x) from a box into complex m x m matrices.
///
/// Constant and PolynomialEntries fields are stored uniformly as a sum of
/// matrix-valued monomials, which is what exact quadrature consumes.
/// GridSampled fields are piecewise constant on a uniform cell grid; a point
/// on an interior cell face belongs to the lower-index cell.
class MatrixField {
 public:
  struct Entry {
    int row = 0;  // 0-based
    int col = 0;
    Polynomial poly;
  };

  static constexpr int kDefaultMaxDegree = 6;

  MatrixField() = default;
  static MatrixField constant(Box box, CMatrix value);
  static MatrixField polynomial(Box box, int m, const std::vector<Entry>& entries,
                                int max_degree = kDefaultMaxDegree);
  static MatrixField grid_sampled(Box box, std::vector<int> cells, std::vector<CMatrix> values);

  FieldKind kind() const { return kind_; }
  int channels() const { return m_; }
  int dim() const { return box_.dim(); }
  const Box& box() const { return box_; }

  /// Throws DomainError when x lies outside the closed box.
  CMatrix eval(const Point& x) const;
  CMatrix operator()(const Point& x) const { return eval(x); }

  /// Uniform bound M with ||C(x)|| <= M on the box.
  double bound() const;
  int degree() const;

  const std::vector<MatrixTerm>& terms() const { return terms_; }
  const std::vector<int>& cells() const { return cells_; }
  const std::vector<CMatrix>& cell_values() const { return values_; }
  int cell_count() const { return static_cast<int>(values_.size()); }
  int cell_index(const Point& x) const;
  Box cell_box(int idx) const;
  Point cell_center(int idx) const;

  /// Applies a real-linear map entrywise to the coefficient data. Valid for
  /// maps that commute with multiplication by real scalars (Re, diagonal
  /// extraction, scaling), which is all the callers need.
  MatrixField transformed(const std::function<CMatrix(const CMatrix&)>& linear_map) const;
  MatrixField plus_constant(const CMatrix& c) const;
  MatrixField operator+(const MatrixField& other) const;
  MatrixField operator-() const;

  /// Entries (row, col, polynomial) for serialisation of polynomial kinds.
  std::vector<Entry> entries() const;

 private:
  void normalise();

  FieldKind kind_ = FieldKind::Constant;
  int m_ = 0;
  Box box_;
  std::vector<MatrixTerm> terms_;
  std::vector<int> cells_;
  std::vector<CMatrix> values_;
};

/// The data of a divergence-form system -sum_kl d_k C_kl d_l on a box.
struct EllipticSystem {
  Box box;
  int m = 1;
  std::vector<MatrixField> coeffs;  // row-major d x d, index k*d + l (0-based)
  BoundaryCondition bc = BoundaryCondition::Dirichlet;
  double mu = 1.0;

  int dim() const { return box.dim(); }
  const MatrixField& C(int k, int l) const { return coeffs[static_cast<std::size_t>(k * dim() + l)]; }
  MatrixField& C(int k, int l) { return coeffs[static_cast<std::size_t>(k * dim() + l)]; }

  /// Checks shapes; throws ArgumentError.
  void validate() const;
  double bound() const;
  bool has_grid_fields() const;
  /// The (md) x (md) matrix with blocks C_kl(x).
  CMatrix block_matrix(const Point& x) const;

  /// System with every coefficient zero except C_kl = field.
  static EllipticSystem single(const Box& box, int m, int k, int l, const MatrixField& field,
                               BoundaryCondition bc);
};

CMatrix symmetrized(const EllipticSystem& sys, int k, int l, const Point& x);

/// Smallest eigenvalue of the Hermitian part (B + B*)/2.
double hermitian_min_eigenvalue(const CMatrix& B);

struct EllipticityReport {
  double lambda_min = 0.0;
  Point argmin;
  double tol = 0.0;
  bool pass = false;
  std::vector<Point> samples;
  std::vector<double> values;
};

/// Sample set used when the caller passes none: a tensor grid with `density`
/// points per axis on the closed box, plus every cell centre of GridSampled
/// coefficients.
std::vector<Point> default_sample_points(const EllipticSystem& sys, int density = 6);

EllipticityReport check_ellipticity(const EllipticSystem& sys, const std::vector<Point>& samples = {},
                                    int density = 6);

/// Realification Q -> Re(Q Re f) + i Re(Q Im f); in the standard basis this is
/// the entrywise real part.
CMatrix check_transform(const CMatrix& Q);
MatrixField check_transform(const MatrixField& field);
EllipticSystem check_transform(const EllipticSystem& sys);

}  // namespace posilab
