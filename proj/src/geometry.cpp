#include "dualnewton/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace dualnewton {

double ChristoffelTensor::max_asymmetry() const {
  double worst = 0.0;
  for (std::size_t i = 0; i < n_; ++i)
    for (std::size_t j = i + 1; j < n_; ++j)
      for (std::size_t k = 0; k < n_; ++k)
        worst = std::max(worst, std::abs((*this)(i, j, k) - (*this)(j, i, k)));
  return worst;
}

double ChristoffelTensor::max_abs() const {
  double best = 0.0;
  for (double v : data_) best = std::max(best, std::abs(v));
  return best;
}

ChristoffelTensor& ChristoffelTensor::operator*=(double s) {
  for (double& v : data_) v *= s;
  return *this;
}

ChristoffelTensor& ChristoffelTensor::operator+=(const ChristoffelTensor& other) {
  if (other.n_ != n_) {
    throw NumericError(ErrorKind::DimensionMismatch, "Christoffel tensor addition");
  }
  for (std::size_t k = 0; k < data_.size(); ++k) data_[k] += other.data_[k];
  return *this;
}

ChristoffelTensor raise_index(const ChristoffelTensor& first_kind, const Matrix& metric) {
  const std::size_t n = first_kind.dim();
  if (metric.rows() != n || metric.cols() != n) {
    throw NumericError(ErrorKind::DimensionMismatch, "raise_index");
  }
  const Cholesky chol(metric);
  ChristoffelTensor out(n);
  Vector rhs(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) rhs[k] = first_kind(i, j, k);
      const Vector raised = chol.solve(rhs);
      for (std::size_t s = 0; s < n; ++s) out(i, j, s) = raised[s];
    }
  }
  return out;
}

ChristoffelTensor lower_index(const ChristoffelTensor& second_kind, const Matrix& metric) {
  const std::size_t n = second_kind.dim();
  if (metric.rows() != n || metric.cols() != n) {
    throw NumericError(ErrorKind::DimensionMismatch, "lower_index");
  }
  ChristoffelTensor out(n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      for (std::size_t k = 0; k < n; ++k) {
        CompensatedSum s;
        for (std::size_t m = 0; m < n; ++m) s += second_kind(i, j, m) * metric(m, k);
        out(i, j, k) = s.value();
      }
    }
  }
  return out;
}

bool DualStructure::contains(std::span<const double> xi) const {
  if (xi.size() != dim || !all_finite(xi)) return false;
  return !in_domain || in_domain(xi);
}

Vector riemannian_gradient(const DualStructure& ds, std::span<const double> eucl_grad,
                           std::span<const double> xi) {
  if (eucl_grad.size() != ds.dim) {
    throw NumericError(ErrorKind::DimensionMismatch, "riemannian_gradient");
  }
  return solve_spd(ds.metric(xi), eucl_grad);
}

Matrix assemble_dual_hessian(const Matrix& jacobian, std::span<const double> a,
                             const ChristoffelTensor& gamma_dual) {
  const std::size_t n = a.size();
  if (jacobian.rows() != n || jacobian.cols() != n || gamma_dual.dim() != n) {
    throw NumericError(ErrorKind::DimensionMismatch, "assemble_dual_hessian");
  }
  Matrix h(n, n);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      CompensatedSum s;
      s += jacobian(i, j);
      for (std::size_t k = 0; k < n; ++k) s += a[k] * gamma_dual(i, k, j);
      h(i, j) = s.value();
    }
  }
  if (!h.all_finite()) {
    throw NumericError(ErrorKind::NonFiniteValue, "dual Hessian matrix");
  }
  return h;
}

Matrix dual_hessian_matrix(const DualStructure& ds, const GradientField& field,
                           std::span<const double> xi, JacobianMode mode) {
  const Vector a = field.value(xi);
  if (!all_finite(a)) {
    throw NumericError(ErrorKind::NonFiniteValue, "gradient field");
  }
  const Matrix jac = (mode == JacobianMode::Analytic && field.jacobian)
                         ? field.jacobian(xi)
                         : fd_jacobian(field.value, xi);
  return assemble_dual_hessian(jac, a, ds.gamma_dual(xi));
}

NewtonStep newton_direction(const DualStructure& ds, const Matrix& h_star,
                            std::span<const double> eucl_grad, std::span<const double> xi) {
  const std::size_t n = ds.dim;
  if (h_star.rows() != n || h_star.cols() != n || eucl_grad.size() != n) {
    throw NumericError(ErrorKind::DimensionMismatch, "newton_direction");
  }
  const Matrix metric = ds.metric(xi);
  const Matrix h_t = h_star.transpose();
  NewtonStep step;
  step.spd = is_spd(metric * h_t);
  if (std::all_of(eucl_grad.begin(), eucl_grad.end(), [](double g) { return g == 0.0; })) {
    step.beta.assign(n, 0.0);
    return step;
  }
  const Vector a = solve_spd(metric, eucl_grad);
  step.beta = solve_general(h_t, scaled(-1.0, a));
  return step;
}

Vector second_order_retract(const DualStructure& ds, std::span<const double> xi,
                            std::span<const double> beta) {
  const std::size_t n = ds.dim;
  if (xi.size() != n || beta.size() != n) {
    throw NumericError(ErrorKind::DimensionMismatch, "second_order_retract");
  }
  const ChristoffelTensor gamma = ds.gamma(xi);
  Vector out(n);
  for (std::size_t i = 0; i < n; ++i) {
    CompensatedSum correction;
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k) correction += gamma(j, k, i) * beta[j] * beta[k];
    out[i] = xi[i] + beta[i] - 0.5 * correction.value();
  }
  if (!ds.contains(out)) {
    throw NumericError(ErrorKind::DomainViolation, "retraction left the chart domain");
  }
  return out;
}

RetractResult retract_with_halving(const DualStructure& ds, std::span<const double> xi,
                                   std::span<const double> beta, int max_halvings) {
  RetractResult result;
  result.step.assign(beta.begin(), beta.end());
  for (result.halvings = 0; result.halvings <= max_halvings; ++result.halvings) {
    try {
      result.point = second_order_retract(ds, xi, result.step);
      return result;
    } catch (const NumericError& e) {
      if (e.kind() != ErrorKind::DomainViolation) throw;
    }
    for (double& b : result.step) b *= 0.5;
  }
  throw NumericError(ErrorKind::DomainViolation,
                     "retraction stayed outside the domain after step halving");
}

std::vector<Matrix> metric_derivatives(const MetricFn& metric, std::span<const double> xi,
                                       const FdScheme& scheme) {
  const std::size_t n = xi.size();
  const VectorField flat = [&metric](std::span<const double> p) {
    const Matrix g = metric(p);
    return Vector(g.data().begin(), g.data().end());
  };
  const Matrix jac = fd_jacobian(flat, xi, scheme);
  std::vector<Matrix> d(n, Matrix(n, n));
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j) d[k](i, j) = jac(k, i * n + j);
  return d;
}

ChristoffelTensor levi_civita_from_metric(const MetricFn& metric, std::span<const double> xi,
                                          const FdScheme& scheme) {
  const std::size_t n = xi.size();
  const std::vector<Matrix> d = metric_derivatives(metric, xi, scheme);
  ChristoffelTensor first(n);
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j)
      for (std::size_t k = 0; k < n; ++k)
        first(i, j, k) = 0.5 * (d[i](j, k) + d[j](i, k) - d[k](i, j));
  return raise_index(first, metric(xi));
}

double duality_residual(const DualStructure& ds, std::span<const double> xi,
                        const FdScheme& scheme) {
  const std::size_t n = ds.dim;
  const Matrix g = ds.metric(xi);
  const std::vector<Matrix> d = metric_derivatives(ds.metric, xi, scheme);
  const ChristoffelTensor primal = lower_index(ds.gamma(xi), g);
  const ChristoffelTensor dual = lower_index(ds.gamma_dual(xi), g);
  double worst = 0.0;
  for (std::size_t k = 0; k < n; ++k)
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = 0; j < n; ++j)
        worst = std::max(worst, std::abs(d[k](i, j) - primal(k, i, j) - dual(k, j, i)));
  return worst;
}

}  // namespace dualnewton
