#include "dualnewton/linalg.hpp"

#include <algorithm>
#include <utility>

namespace dualnewton {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::NotPositiveDefinite: return "NotPositiveDefinite";
    case ErrorKind::DimensionMismatch: return "DimensionMismatch";
    case ErrorKind::SingularMatrix: return "SingularMatrix";
    case ErrorKind::NonFiniteValue: return "NonFiniteValue";
    case ErrorKind::DomainViolation: return "DomainViolation";
    case ErrorKind::MomentInfeasible: return "MomentInfeasible";
    case ErrorKind::DivergenceUndefined: return "DivergenceUndefined";
    case ErrorKind::QuadratureUnderflow: return "QuadratureUnderflow";
    case ErrorKind::LineSearchFailure: return "LineSearchFailure";
    case ErrorKind::InsufficientIterations: return "InsufficientIterations";
  }
  return "Unknown";
}

Matrix::Matrix(std::initializer_list<std::initializer_list<double>> rows) {
  rows_ = rows.size();
  cols_ = rows_ == 0 ? 0 : rows.begin()->size();
  data_.reserve(rows_ * cols_);
  for (const auto& r : rows) {
    if (r.size() != cols_) {
      throw NumericError(ErrorKind::DimensionMismatch, "ragged matrix literal");
    }
    data_.insert(data_.end(), r.begin(), r.end());
  }
}

Matrix Matrix::identity(std::size_t n) {
  Matrix m(n, n);
  for (std::size_t i = 0; i < n; ++i) m(i, i) = 1.0;
  return m;
}

Matrix Matrix::diagonal(std::span<const double> diag) {
  Matrix m(diag.size(), diag.size());
  for (std::size_t i = 0; i < diag.size(); ++i) m(i, i) = diag[i];
  return m;
}

Matrix Matrix::transpose() const {
  Matrix t(cols_, rows_);
  for (std::size_t i = 0; i < rows_; ++i)
    for (std::size_t j = 0; j < cols_; ++j) t(j, i) = (*this)(i, j);
  return t;
}

double Matrix::norm_inf() const {
  double best = 0.0;
  for (std::size_t i = 0; i < rows_; ++i) {
    CompensatedSum s;
    for (double v : row(i)) s += std::abs(v);
    best = std::max(best, s.value());
  }
  return best;
}

double Matrix::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

bool Matrix::all_finite() const { return dualnewton::all_finite(data_); }

Matrix& Matrix::operator+=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw NumericError(ErrorKind::DimensionMismatch, "matrix addition");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

Matrix& Matrix::operator-=(const Matrix& other) {
  if (rows_ != other.rows_ || cols_ != other.cols_) {
    throw NumericError(ErrorKind::DimensionMismatch, "matrix subtraction");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] -= other.data_[k];
  return *this;
}

Matrix& Matrix::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

Matrix operator+(Matrix a, const Matrix& b) { return a += b; }
Matrix operator-(Matrix a, const Matrix& b) { return a -= b; }
Matrix operator*(double s, Matrix a) { return a *= s; }

Matrix operator*(const Matrix& a, const Matrix& b) {
  if (a.cols() != b.rows()) {
    throw NumericError(ErrorKind::DimensionMismatch, "matrix product");
  }
  Matrix c(a.rows(), b.cols());
  for (std::size_t i = 0; i < a.rows(); ++i) {
    for (std::size_t j = 0; j < b.cols(); ++j) {
      CompensatedSum s;
      for (std::size_t k = 0; k < a.cols(); ++k) s += a(i, k) * b(k, j);
      c(i, j) = s.value();
    }
  }
  return c;
}

Vector operator*(const Matrix& a, std::span<const double> x) {
  if (a.cols() != x.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "matrix-vector product");
  }
  Vector y(a.rows());
  for (std::size_t i = 0; i < a.rows(); ++i) y[i] = dot(a.row(i), x);
  return y;
}

double dot(std::span<const double> a, std::span<const double> b) {
  if (a.size() != b.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "dot product");
  }
  CompensatedSum s;
  for (std::size_t i = 0; i < a.size(); ++i) s += a[i] * b[i];
  return s.value();
}

double norm2(std::span<const double> x) {
  double scale = norm_inf(x);
  if (scale == 0.0 || !std::isfinite(scale)) return scale;
  CompensatedSum s;
  for (double v : x) {
    const double r = v / scale;
    s += r * r;
  }
  return scale * std::sqrt(s.value());
}

double norm_inf(std::span<const double> x) {
  double best = 0.0;
  for (double v : x) {
    if (!std::isfinite(v)) return std::numeric_limits<double>::infinity();
    best = std::max(best, std::abs(v));
  }
  return best;
}

bool all_finite(std::span<const double> x) {
  return std::all_of(x.begin(), x.end(), [](double v) { return std::isfinite(v); });
}

Vector axpy(double alpha, std::span<const double> x, std::span<const double> y) {
  if (x.size() != y.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "axpy");
  }
  Vector out(y.begin(), y.end());
  for (std::size_t i = 0; i < x.size(); ++i) out[i] += alpha * x[i];
  return out;
}

Vector scaled(double alpha, std::span<const double> x) {
  Vector out(x.begin(), x.end());
  for (double& v : out) v *= alpha;
  return out;
}

Cholesky::Cholesky(const Matrix& a, double pivot_tol) : lower_(a.rows(), a.cols()) {
  if (!a.square()) {
    throw NumericError(ErrorKind::DimensionMismatch, "Cholesky of non-square matrix");
  }
  const std::size_t n = a.rows();
  min_pivot_ = std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    CompensatedSum diag;
    diag += a(j, j);
    for (std::size_t k = 0; k < j; ++k) diag += -lower_(j, k) * lower_(j, k);
    const double pivot = diag.value();
    if (!(pivot > pivot_tol)) {
      throw NumericError(ErrorKind::NotPositiveDefinite,
                         "Cholesky pivot " + std::to_string(j) + " = " + std::to_string(pivot));
    }
    min_pivot_ = std::min(min_pivot_, pivot);
    const double ljj = std::sqrt(pivot);
    lower_(j, j) = ljj;
    for (std::size_t i = j + 1; i < n; ++i) {
      CompensatedSum s;
      s += a(i, j);
      for (std::size_t k = 0; k < j; ++k) s += -lower_(i, k) * lower_(j, k);
      lower_(i, j) = s.value() / ljj;
    }
  }
}

Vector Cholesky::solve(std::span<const double> b) const {
  const std::size_t n = lower_.rows();
  if (b.size() != n) {
    throw NumericError(ErrorKind::DimensionMismatch, "Cholesky solve");
  }
  Vector y(n);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum s;
    s += b[i];
    for (std::size_t k = 0; k < i; ++k) s += -lower_(i, k) * y[k];
    y[i] = s.value() / lower_(i, i);
  }
  Vector x(n);
  for (std::size_t ii = n; ii-- > 0;) {
    CompensatedSum s;
    s += y[ii];
    for (std::size_t k = ii + 1; k < n; ++k) s += -lower_(k, ii) * x[k];
    x[ii] = s.value() / lower_(ii, ii);
  }
  return x;
}

Vector solve_spd(const Matrix& a, std::span<const double> b) {
  if (!a.square() || a.rows() != b.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "solve_spd");
  }
  return Cholesky(a).solve(b);
}

Vector solve_general(const Matrix& a, std::span<const double> b) {
  if (!a.square() || a.rows() != b.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "solve_general");
  }
  const std::size_t n = a.rows();
  const double threshold = 1e-14 * a.norm_inf();
  Matrix lu = a;
  Vector x(b.begin(), b.end());
  for (std::size_t k = 0; k < n; ++k) {
    std::size_t piv = k;
    for (std::size_t i = k + 1; i < n; ++i) {
      if (std::abs(lu(i, k)) > std::abs(lu(piv, k))) piv = i;
    }
    if (!(std::abs(lu(piv, k)) >= threshold) || lu(piv, k) == 0.0) {
      throw NumericError(ErrorKind::SingularMatrix,
                         "LU pivot " + std::to_string(k) + " below threshold");
    }
    if (piv != k) {
      for (std::size_t j = 0; j < n; ++j) std::swap(lu(k, j), lu(piv, j));
      std::swap(x[k], x[piv]);
    }
    for (std::size_t i = k + 1; i < n; ++i) {
      const double m = lu(i, k) / lu(k, k);
      lu(i, k) = m;
      for (std::size_t j = k + 1; j < n; ++j) lu(i, j) -= m * lu(k, j);
      x[i] -= m * x[k];
    }
  }
  for (std::size_t ii = n; ii-- > 0;) {
    CompensatedSum s;
    s += x[ii];
    for (std::size_t j = ii + 1; j < n; ++j) s += -lu(ii, j) * x[j];
    x[ii] = s.value() / lu(ii, ii);
  }
  return x;
}

bool is_spd(const Matrix& a, double tol) {
  if (!a.square()) {
    throw NumericError(ErrorKind::DimensionMismatch, "is_spd of non-square matrix");
  }
  if (!a.all_finite()) return false;
  Matrix sym = a;
  for (std::size_t i = 0; i < a.rows(); ++i)
    for (std::size_t j = 0; j < a.cols(); ++j) sym(i, j) = 0.5 * (a(i, j) + a(j, i));
  try {
    Cholesky chol(sym, tol);
    return true;
  } catch (const NumericError&) {
    return false;
  }
}

Matrix fd_jacobian(const VectorField& field, std::span<const double> x, const FdScheme& scheme) {
  const std::size_t n = x.size();
  Vector probe(x.begin(), x.end());
  Matrix jac;
  for (std::size_t i = 0; i < n; ++i) {
    const double h = scheme.step_for(x[i]);
    probe[i] = x[i] + h;
    const Vector plus = field(probe);
    probe[i] = x[i] - h;
    const Vector minus = field(probe);
    probe[i] = x[i];
    if (!all_finite(plus) || !all_finite(minus)) {
      throw NumericError(ErrorKind::NonFiniteValue, "fd_jacobian evaluation");
    }
    if (i == 0) jac = Matrix(n, plus.size());
    if (plus.size() != jac.cols() || minus.size() != jac.cols()) {
      throw NumericError(ErrorKind::DimensionMismatch, "fd_jacobian field size changed");
    }
    // Effective step after rounding of x +/- h.
    const double width = (x[i] + h) - (x[i] - h);
    for (std::size_t j = 0; j < plus.size(); ++j) jac(i, j) = (plus[j] - minus[j]) / width;
  }
  return jac;
}

Vector fd_gradient(const ScalarField& f, std::span<const double> x, const FdScheme& scheme) {
  const VectorField wrapped = [&f](std::span<const double> p) { return Vector{f(p)}; };
  const Matrix jac = fd_jacobian(wrapped, x, scheme);
  Vector g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) g[i] = jac(i, 0);
  return g;
}

}  // namespace dualnewton
