#pragma once

// Chart-level kernel of the dual Riemannian Newton method.
//
// Everything works in one fixed coordinate chart xi = (xi_1, ..., xi_n). A
// model supplies the metric G(xi) and the Christoffel symbols of a dual pair
// of connections; this header turns those into the Riemannian gradient, the
// dual Hessian matrix H*, the Newton direction and the quadratic retraction.

#include <cstddef>
#include <functional>
#include <span>
#include <vector>

#include "dualnewton/linalg.hpp"

namespace dualnewton {

/// n^3 connection coefficients. Entry (i, j, k) is Gamma^k_{ij} for symbols of
/// the second kind (upper index last), or Gamma_{ij,k} for the first kind.
class ChristoffelTensor {
 public:
  ChristoffelTensor() = default;
  explicit ChristoffelTensor(std::size_t n) : n_(n), data_(n * n * n, 0.0) {}

  std::size_t dim() const { return n_; }

  double& operator()(std::size_t i, std::size_t j, std::size_t k) {
    return data_[(i * n_ + j) * n_ + k];
  }
  double operator()(std::size_t i, std::size_t j, std::size_t k) const {
    return data_[(i * n_ + j) * n_ + k];
  }

  std::span<double> data() { return data_; }
  std::span<const double> data() const { return data_; }

  /// max over (i, j, k) of |T(i,j,k) - T(j,i,k)|.
  double max_asymmetry() const;
  double max_abs() const;

  ChristoffelTensor& operator*=(double s);
  ChristoffelTensor& operator+=(const ChristoffelTensor& other);

 private:
  std::size_t n_ = 0;
  std::vector<double> data_;
};

/// Second kind from first kind: Gamma^s_{ij} = sum_k Gamma_{ij,k} g^{ks}, via
/// an SPD solve against G rather than an explicit inverse.
ChristoffelTensor raise_index(const ChristoffelTensor& first_kind, const Matrix& metric);

/// First kind from second kind: Gamma_{ij,k} = sum_s Gamma^s_{ij} g_{sk}.
ChristoffelTensor lower_index(const ChristoffelTensor& second_kind, const Matrix& metric);

using MetricFn = std::function<Matrix(std::span<const double>)>;
using ChristoffelFn = std::function<ChristoffelTensor(std::span<const double>)>;
using DomainFn = std::function<bool(std::span<const double>)>;
using JacobianFn = std::function<Matrix(std::span<const double>)>;

/// Metric plus a dual pair of connections (nabla = alpha, nabla* = -alpha).
/// All callables must be re-entrant.
struct DualStructure {
  std::size_t dim = 0;
  MetricFn metric;
  ChristoffelFn gamma;       // second kind, connection used by the retraction
  ChristoffelFn gamma_dual;  // second kind, connection used by the Newton equation
  double alpha = 0.0;
  DomainFn in_domain;        // empty means "every finite point"

  bool contains(std::span<const double> xi) const;
};

/// Coordinates of the Riemannian gradient, a(xi) = G(xi)^{-1} grad f(xi),
/// optionally with an analytic Jacobian J_ij = d a_j / d xi_i.
struct GradientField {
  VectorField value;
  JacobianFn jacobian;
};

enum class JacobianMode { Analytic, FiniteDifference };

/// a = G(xi)^{-1} eucl_grad.
Vector riemannian_gradient(const DualStructure& ds, std::span<const double> eucl_grad,
                           std::span<const double> xi);

/// H*_ij = d a_j / d xi_i + sum_k a_k Gamma*^j_{ik}. In Analytic mode the
/// field's Jacobian callback is used when present; otherwise, and in
/// FiniteDifference mode, the term comes from central differences of a(.).
Matrix dual_hessian_matrix(const DualStructure& ds, const GradientField& field,
                           std::span<const double> xi,
                           JacobianMode mode = JacobianMode::Analytic);

/// Same assembly from a precomputed gradient field value and Jacobian.
Matrix assemble_dual_hessian(const Matrix& jacobian, std::span<const double> a,
                             const ChristoffelTensor& gamma_dual);

struct NewtonStep {
  Vector beta;
  /// G * H*^T is symmetric positive definite, which certifies descent.
  bool spd = false;
};

/// Solves H*^T beta = -G^{-1} grad f. Throws SingularMatrix when H*^T is
/// numerically singular.
NewtonStep newton_direction(const DualStructure& ds, const Matrix& h_star,
                            std::span<const double> eucl_grad, std::span<const double> xi);

/// xi_i + beta_i - 1/2 sum_jk Gamma^i_{jk} beta_j beta_k with Gamma of nabla.
/// Throws DomainViolation when the result leaves the chart domain.
Vector second_order_retract(const DualStructure& ds, std::span<const double> xi,
                            std::span<const double> beta);

struct RetractResult {
  Vector point;
  Vector step;  // the (possibly halved) tangent coordinates actually used
  int halvings = 0;
};

/// second_order_retract with up to `max_halvings` halvings of beta on domain
/// violations. Throws DomainViolation when every attempt fails.
RetractResult retract_with_halving(const DualStructure& ds, std::span<const double> xi,
                                   std::span<const double> beta, int max_halvings = 30);

/// d_k G for k = 0..n-1 by central differences.
std::vector<Matrix> metric_derivatives(const MetricFn& metric, std::span<const double> xi,
                                       const FdScheme& scheme = {});

/// Levi-Civita symbols (second kind) from finite differences of the metric.
ChristoffelTensor levi_civita_from_metric(const MetricFn& metric, std::span<const double> xi,
                                          const FdScheme& scheme = {});

/// max_{ijk} |d_k g_ij - Gamma_{ki,j} - Gamma*_{kj,i}| with first-kind symbols
/// lowered through G and d_k g_ij by finite differences.
double duality_residual(const DualStructure& ds, std::span<const double> xi,
                        const FdScheme& scheme = {});

}  // namespace dualnewton
