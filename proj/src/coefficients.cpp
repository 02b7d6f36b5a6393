#include "posilab/coefficients.hpp"

#include <algorithm>
#include <cmath>
#include <map>

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

namespace posilab {

namespace {

double spectral_norm(const CMatrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<CMatrix> svd(A);
  return svd.singularValues()(0);
}

double spectral_norm(const RMatrix& A) {
  if (A.size() == 0) return 0.0;
  Eigen::JacobiSVD<RMatrix> svd(A);
  return svd.singularValues()(0);
}

double monomial(const std::vector<int>& exps, const Point& x) {
  double v = 1.0;
  for (std::size_t i = 0; i < exps.size(); ++i)
    for (int p = 0; p < exps[i]; ++p) v *= x[i];
  return v;
}

}  // namespace

cplx evaluate(const Polynomial& p, const Point& x) {
  cplx s = 0.0;
  for (const auto& t : p) s += t.coef * monomial(t.exps, x);
  return s;
}

int total_degree(const std::vector<int>& exps) {
  int s = 0;
  for (int e : exps) s += e;
  return s;
}

std::string to_string(FieldKind k) {
  switch (k) {
    case FieldKind::Constant: return "constant";
    case FieldKind::PolynomialEntries: return "polynomial";
    case FieldKind::GridSampled: return "grid";
  }
  return "?";
}

MatrixField MatrixField::constant(Box box, CMatrix value) {
  if (value.rows() != value.cols() || value.rows() == 0)
    throw ArgumentError("constant field needs a nonempty square matrix");
  if (!value.allFinite()) throw ArgumentError("constant field has non-finite entries");
  MatrixField f;
  f.kind_ = FieldKind::Constant;
  f.m_ = static_cast<int>(value.rows());
  f.box_ = std::move(box);
  f.terms_.push_back({std::vector<int>(static_cast<std::size_t>(f.box_.dim()), 0), std::move(value)});
  return f;
}

MatrixField MatrixField::polynomial(Box box, int m, const std::vector<Entry>& entries, int max_degree) {
  if (m <= 0) throw ArgumentError("channel count must be positive");
  const int d = box.dim();
  MatrixField f;
  f.kind_ = FieldKind::PolynomialEntries;
  f.m_ = m;
  f.box_ = std::move(box);
  f.terms_.push_back({std::vector<int>(static_cast<std::size_t>(d), 0), CMatrix::Zero(m, m)});
  for (const auto& e : entries) {
    if (e.row < 0 || e.row >= m || e.col < 0 || e.col >= m)
      throw ArgumentError("polynomial entry index out of range");
    for (const auto& t : e.poly) {
      if (static_cast<int>(t.exps.size()) != d)
        throw ArgumentError("monomial exponent count does not match the dimension");
      if (std::any_of(t.exps.begin(), t.exps.end(), [](int p) { return p < 0; }))
        throw ArgumentError("negative monomial exponent");
      if (total_degree(t.exps) > max_degree)
        throw CapacityError("polynomial degree " + std::to_string(total_degree(t.exps)) +
                            " exceeds the configured maximum " + std::to_string(max_degree));
      if (!std::isfinite(t.coef.real()) || !std::isfinite(t.coef.imag()))
        throw ArgumentError("non-finite polynomial coefficient");
      CMatrix c = CMatrix::Zero(m, m);
      c(e.row, e.col) = t.coef;
      f.terms_.push_back({t.exps, c});
    }
  }
  f.normalise();
  return f;
}

MatrixField MatrixField::grid_sampled(Box box, std::vector<int> cells, std::vector<CMatrix> values) {
  if (static_cast<int>(cells.size()) != box.dim()) throw ArgumentError("cell counts must match the dimension");
  std::size_t count = 1;
  for (int n : cells) {
    if (n < 1) throw ArgumentError("grid-sampled field needs at least one cell per axis");
    count *= static_cast<std::size_t>(n);
  }
  if (values.size() != count) throw ArgumentError("grid-sampled field: wrong number of cell values");
  const auto m = values.front().rows();
  for (const auto& v : values) {
    if (v.rows() != m || v.cols() != m) throw ArgumentError("grid-sampled field: inconsistent matrix sizes");
    if (!v.allFinite()) throw ArgumentError("grid-sampled field has non-finite entries");
  }
  MatrixField f;
  f.kind_ = FieldKind::GridSampled;
  f.m_ = static_cast<int>(m);
  f.box_ = std::move(box);
  f.cells_ = std::move(cells);
  f.values_ = std::move(values);
  return f;
}

void MatrixField::normalise() {
  if (kind_ == FieldKind::GridSampled) return;
  std::map<std::vector<int>, CMatrix> merged;
  for (auto& t : terms_) {
    auto it = merged.find(t.exps);
    if (it == merged.end())
      merged.emplace(t.exps, t.coef);
    else
      it->second += t.coef;
  }
  terms_.clear();
  const std::vector<int> zero(static_cast<std::size_t>(box_.dim()), 0);
  for (auto& [exps, c] : merged)
    if (exps == zero || c.cwiseAbs().maxCoeff() != 0.0) terms_.push_back({exps, c});
  if (terms_.empty() || terms_.front().exps != zero)
    terms_.insert(terms_.begin(), {zero, CMatrix::Zero(m_, m_)});
  kind_ = degree() == 0 ? FieldKind::Constant : FieldKind::PolynomialEntries;
}

int MatrixField::degree() const {
  int deg = 0;
  for (const auto& t : terms_) deg = std::max(deg, total_degree(t.exps));
  return deg;
}

int MatrixField::cell_index(const Point& x) const {
  int idx = 0;
  int stride = 1;
  for (int i = 0; i < dim(); ++i) {
    const auto& s = box_.sides[static_cast<std::size_t>(i)];
    const int n = cells_[static_cast<std::size_t>(i)];
    const double h = s.length() / n;
    int c = static_cast<int>(std::ceil((x[static_cast<std::size_t>(i)] - s.lo) / h)) - 1;
    c = std::clamp(c, 0, n - 1);
    idx += c * stride;
    stride *= n;
  }
  return idx;
}

Box MatrixField::cell_box(int idx) const {
  std::vector<Interval> sides;
  for (int i = 0; i < dim(); ++i) {
    const auto& s = box_.sides[static_cast<std::size_t>(i)];
    const int n = cells_[static_cast<std::size_t>(i)];
    const int c = idx % n;
    idx /= n;
    const double h = s.length() / n;
    sides.push_back({s.lo + c * h, s.lo + (c + 1) * h});
  }
  return Box(std::move(sides));
}

Point MatrixField::cell_center(int idx) const {
  Box b = cell_box(idx);
  Point x;
  for (const auto& s : b.sides) x.push_back(0.5 * (s.lo + s.hi));
  return x;
}

CMatrix MatrixField::eval(const Point& x) const {
  if (!box_.contains(x)) throw DomainError("point " + format_point(x) + " lies outside the coefficient box");
  if (kind_ == FieldKind::GridSampled) return values_[static_cast<std::size_t>(cell_index(x))];
  CMatrix out = CMatrix::Zero(m_, m_);
  for (const auto& t : terms_) out += monomial(t.exps, x) * t.coef;
  return out;
}

double MatrixField::bound() const {
  if (kind_ == FieldKind::GridSampled) {
    double b = 0.0;
    for (const auto& v : values_) b = std::max(b, spectral_norm(v));
    return b;
  }
  if (kind_ == FieldKind::Constant) return spectral_norm(terms_.front().coef);
  // |C(x)| <= B entrywise, and the spectral norm is monotone on nonnegative matrices.
  RMatrix B = RMatrix::Zero(m_, m_);
  for (const auto& t : terms_) {
    double scale = 1.0;
    for (int i = 0; i < dim(); ++i) {
      const auto& s = box_.sides[static_cast<std::size_t>(i)];
      scale *= std::pow(std::max(std::abs(s.lo), std::abs(s.hi)), t.exps[static_cast<std::size_t>(i)]);
    }
    B += scale * t.coef.cwiseAbs();
  }
  return spectral_norm(B);
}

MatrixField MatrixField::transformed(const std::function<CMatrix(const CMatrix&)>& linear_map) const {
  MatrixField f = *this;
  if (kind_ == FieldKind::GridSampled) {
    for (auto& v : f.values_) v = linear_map(v);
    f.m_ = static_cast<int>(f.values_.front().rows());
    return f;
  }
  for (auto& t : f.terms_) t.coef = linear_map(t.coef);
  f.m_ = static_cast<int>(f.terms_.front().coef.rows());
  f.normalise();
  return f;
}

MatrixField MatrixField::plus_constant(const CMatrix& c) const {
  if (c.rows() != m_ || c.cols() != m_) throw ArgumentError("plus_constant: size mismatch");
  MatrixField f = *this;
  if (kind_ == FieldKind::GridSampled) {
    for (auto& v : f.values_) v += c;
    return f;
  }
  f.terms_.front().coef += c;
  f.normalise();
  return f;
}

MatrixField MatrixField::operator+(const MatrixField& other) const {
  if (other.m_ != m_ || !(other.box_ == box_)) throw ArgumentError("field sum: shape mismatch");
  if (kind_ == FieldKind::GridSampled || other.kind_ == FieldKind::GridSampled) {
    if (kind_ == FieldKind::GridSampled && other.kind_ == FieldKind::GridSampled) {
      if (cells_ != other.cells_) throw ArgumentError("field sum: grids differ");
      MatrixField f = *this;
      for (std::size_t i = 0; i < f.values_.size(); ++i) f.values_[i] += other.values_[i];
      return f;
    }
    const MatrixField& grid = kind_ == FieldKind::GridSampled ? *this : other;
    const MatrixField& poly = kind_ == FieldKind::GridSampled ? other : *this;
    if (poly.kind_ != FieldKind::Constant) throw ArgumentError("field sum: cannot add a polynomial to a grid field");
    return grid.plus_constant(poly.terms_.front().coef);
  }
  MatrixField f = *this;
  f.terms_.insert(f.terms_.end(), other.terms_.begin(), other.terms_.end());
  f.normalise();
  return f;
}

MatrixField MatrixField::operator-() const {
  return transformed([](const CMatrix& c) { return CMatrix(-c); });
}

std::vector<MatrixField::Entry> MatrixField::entries() const {
  std::vector<Entry> out;
  for (int i = 0; i < m_; ++i)
    for (int j = 0; j < m_; ++j) {
      Entry e{i, j, {}};
      for (const auto& t : terms_)
        if (t.coef(i, j) != cplx(0.0)) e.poly.push_back({t.exps, t.coef(i, j)});
      if (!e.poly.empty()) out.push_back(std::move(e));
    }
  return out;
}

void EllipticSystem::validate() const {
  const int d = dim();
  if (d < 1) throw ArgumentError("spatial dimension must be at least 1");
  if (m < 1) throw ArgumentError("channel count must be positive");
  for (const auto& s : box.sides)
    if (!(s.hi > s.lo)) throw ArgumentError("box sides must have positive length");
  if (static_cast<int>(coeffs.size()) != d * d)
    throw ArgumentError("expected d*d = " + std::to_string(d * d) + " coefficient fields");
  for (const auto& c : coeffs) {
    if (c.channels() != m) throw ArgumentError("coefficient fields must share the channel count");
    if (!(c.box() == box)) throw ArgumentError("coefficient fields must share the domain box");
  }
  if (!(mu > 0.0)) throw ArgumentError("declared ellipticity constant must be positive");
}

double EllipticSystem::bound() const {
  double b = 0.0;
  for (const auto& c : coeffs) b = std::max(b, c.bound());
  return b;
}

bool EllipticSystem::has_grid_fields() const {
  return std::any_of(coeffs.begin(), coeffs.end(),
                     [](const MatrixField& f) { return f.kind() == FieldKind::GridSampled; });
}

CMatrix EllipticSystem::block_matrix(const Point& x) const {
  const int d = dim();
  CMatrix B(d * m, d * m);
  for (int k = 0; k < d; ++k)
    for (int l = 0; l < d; ++l) B.block(k * m, l * m, m, m) = C(k, l).eval(x);
  return B;
}

EllipticSystem EllipticSystem::single(const Box& box, int m, int k, int l, const MatrixField& field,
                                      BoundaryCondition bc) {
  EllipticSystem sys;
  sys.box = box;
  sys.m = m;
  sys.bc = bc;
  const int d = box.dim();
  sys.coeffs.assign(static_cast<std::size_t>(d * d), MatrixField::constant(box, CMatrix::Zero(m, m)));
  sys.C(k, l) = field;
  return sys;
}

CMatrix symmetrized(const EllipticSystem& sys, int k, int l, const Point& x) {
  if (k < 0 || l < 0 || k >= sys.dim() || l >= sys.dim()) throw ArgumentError("symmetrized: index out of range");
  return sys.C(k, l).eval(x) + sys.C(l, k).eval(x);
}

double hermitian_min_eigenvalue(const CMatrix& B) {
  CMatrix H = 0.5 * (B + B.adjoint());
  Eigen::SelfAdjointEigenSolver<CMatrix> es(H, Eigen::EigenvaluesOnly);
  if (es.info() != Eigen::Success) throw NumericalError("Hermitian eigensolver did not converge");
  return es.eigenvalues()(0);
}

std::vector<Point> default_sample_points(const EllipticSystem& sys, int density) {
  const int d = sys.dim();
  density = std::max(density, 2);
  std::vector<Point> pts;
  std::vector<int> idx(static_cast<std::size_t>(d), 0);
  while (true) {
    Point x(static_cast<std::size_t>(d));
    for (int i = 0; i < d; ++i) {
      const auto& s = sys.box.sides[static_cast<std::size_t>(i)];
      x[static_cast<std::size_t>(i)] = s.lo + s.length() * idx[static_cast<std::size_t>(i)] / (density - 1);
    }
    pts.push_back(std::move(x));
    int i = 0;
    while (i < d && ++idx[static_cast<std::size_t>(i)] == density) idx[static_cast<std::size_t>(i++)] = 0;
    if (i == d) break;
  }
  for (const auto& f : sys.coeffs)
    if (f.kind() == FieldKind::GridSampled)
      for (int c = 0; c < f.cell_count(); ++c) pts.push_back(f.cell_center(c));
  return pts;
}

EllipticityReport check_ellipticity(const EllipticSystem& sys, const std::vector<Point>& samples, int density) {
  sys.validate();
  EllipticityReport rep;
  rep.samples = samples.empty() ? default_sample_points(sys, density) : samples;
  rep.tol = 1e-10 * std::max(1.0, sys.bound());
  rep.lambda_min = std::numeric_limits<double>::infinity();
  for (const auto& x : rep.samples) {
    double lam = 0.0;
    try {
      lam = hermitian_min_eigenvalue(sys.block_matrix(x));
    } catch (const NumericalError&) {
      throw NumericalError("ellipticity check: eigensolver failed at " + format_point(x));
    }
    rep.values.push_back(lam);
    if (lam < rep.lambda_min) {
      rep.lambda_min = lam;
      rep.argmin = x;
    }
  }
  rep.pass = rep.lambda_min >= sys.mu - rep.tol;
  return rep;
}

CMatrix check_transform(const CMatrix& Q) { return Q.real().cast<cplx>(); }

MatrixField check_transform(const MatrixField& field) {
  return field.transformed([](const CMatrix& c) { return check_transform(c); });
}

EllipticSystem check_transform(const EllipticSystem& sys) {
  EllipticSystem out = sys;
  for (auto& c : out.coeffs) c = check_transform(c);
  return out;
}

}  // namespace posilab
