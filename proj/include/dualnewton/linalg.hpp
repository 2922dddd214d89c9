#pragma once

// Small dense linear algebra and finite-difference helpers.
//
// Problem dimensions in this library are at most a few dozen, so everything
// here is a straightforward row-major dense implementation. Every reduction
// runs in a fixed order with compensated accumulation so that results do not
// depend on how the caller schedules work.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <initializer_list>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace dualnewton {

using Vector = std::vector<double>;

enum class ErrorKind {
  NotPositiveDefinite,
  DimensionMismatch,
  SingularMatrix,
  NonFiniteValue,
  DomainViolation,
  MomentInfeasible,
  DivergenceUndefined,
  QuadratureUnderflow,
  LineSearchFailure,
  InsufficientIterations,
};

const char* to_string(ErrorKind kind);

/// Numerical failure carrying a machine-readable kind.
class NumericError : public std::runtime_error {
 public:
  NumericError(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what),
        kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

/// Neumaier-compensated running sum.
class CompensatedSum {
 public:
  void add(double x) {
    const double t = sum_ + x;
    if (std::abs(sum_) >= std::abs(x)) {
      carry_ += (sum_ - t) + x;
    } else {
      carry_ += (x - t) + sum_;
    }
    sum_ = t;
  }
  CompensatedSum& operator+=(double x) {
    add(x);
    return *this;
  }
  double value() const { return sum_ + carry_; }

 private:
  double sum_ = 0.0;
  double carry_ = 0.0;
};

class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}
  Matrix(std::initializer_list<std::initializer_list<double>> rows);

  static Matrix identity(std::size_t n);
  static Matrix diagonal(std::span<const double> diag);

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }
  bool square() const { return rows_ == cols_; }

  double& operator()(std::size_t i, std::size_t j) { return data_[i * cols_ + j]; }
  double operator()(std::size_t i, std::size_t j) const { return data_[i * cols_ + j]; }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }
  std::span<const double> row(std::size_t i) const {
    return std::span<const double>(data_).subspan(i * cols_, cols_);
  }

  Matrix transpose() const;
  /// Infinity norm (max absolute row sum).
  double norm_inf() const;
  double max_abs() const;
  bool all_finite() const;

  Matrix& operator+=(const Matrix& other);
  Matrix& operator-=(const Matrix& other);
  Matrix& operator*=(double s);

  friend bool operator==(const Matrix&, const Matrix&) = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

Matrix operator+(Matrix a, const Matrix& b);
Matrix operator-(Matrix a, const Matrix& b);
Matrix operator*(double s, Matrix a);
Matrix operator*(const Matrix& a, const Matrix& b);
Vector operator*(const Matrix& a, std::span<const double> x);

double dot(std::span<const double> a, std::span<const double> b);
double norm2(std::span<const double> x);
double norm_inf(std::span<const double> x);
bool all_finite(std::span<const double> x);
Vector axpy(double alpha, std::span<const double> x, std::span<const double> y);
Vector scaled(double alpha, std::span<const double> x);

/// Lower-triangular Cholesky factor L with A = L L^T.
class Cholesky {
 public:
  /// Factors the lower triangle of `a`. Throws NotPositiveDefinite when a
  /// pivot is <= `pivot_tol`.
  explicit Cholesky(const Matrix& a, double pivot_tol = 0.0);

  Vector solve(std::span<const double> b) const;
  const Matrix& factor() const { return lower_; }
  double min_pivot() const { return min_pivot_; }

 private:
  Matrix lower_;
  double min_pivot_ = 0.0;
};

/// Solves A x = b for symmetric positive definite A via Cholesky.
Vector solve_spd(const Matrix& a, std::span<const double> b);

/// Solves A x = b via LU with partial pivoting. Throws SingularMatrix when a
/// pivot magnitude falls below 1e-14 * ||A||_inf.
Vector solve_general(const Matrix& a, std::span<const double> b);

/// True iff (A + A^T)/2 admits a Cholesky factorization with every pivot
/// strictly greater than `tol`.
bool is_spd(const Matrix& a, double tol = 0.0);

/// Central second-order finite differences with a per-coordinate step
/// h_i = relative_step * max(1, |x_i|).
struct FdScheme {
  double relative_step = std::cbrt(std::numeric_limits<double>::epsilon());

  double step_for(double x) const { return relative_step * std::max(1.0, std::abs(x)); }
};

using ScalarField = std::function<double(std::span<const double>)>;
using VectorField = std::function<Vector(std::span<const double>)>;

/// Entry (i, j) estimates d field_j / d x_i.
Matrix fd_jacobian(const VectorField& field, std::span<const double> x,
                   const FdScheme& scheme = {});

/// Central-difference gradient of a scalar field.
Vector fd_gradient(const ScalarField& f, std::span<const double> x,
                   const FdScheme& scheme = {});

}  // namespace dualnewton
