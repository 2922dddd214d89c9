#pragma once

// Objective functions in a model's coordinate chart: value plus Euclidean
// coordinate gradient, and where available the analytic Jacobian of the
// Riemannian gradient field a = G^{-1} grad f.

#include <cstddef>
#include <functional>
#include <span>

#include "dualnewton/geometry.hpp"
#include "dualnewton/linalg.hpp"
#include "dualnewton/models.hpp"

namespace dualnewton {

struct Evaluation {
  double value = 0.0;
  Vector grad;
};

struct Objective {
  std::size_t dim = 0;
  std::function<Evaluation(std::span<const double>)> evaluate;
  /// J_ij = d a_j / d xi_i for a = G^{-1} grad f; empty when not available.
  JacobianFn grad_field_jacobian;
  /// Empty means every finite point is admissible.
  DomainFn in_domain;

  double value(std::span<const double> xi) const { return evaluate(xi).value; }
  Vector gradient(std::span<const double> xi) const { return evaluate(xi).grad; }
  bool contains(std::span<const double> xi) const;
};

/// a(xi) = G(xi)^{-1} grad f(xi), carrying the objective's analytic Jacobian.
/// Holds references: `ds` and `obj` must outlive the returned field.
GradientField make_gradient_field(const DualStructure& ds, const Objective& obj);

// ---------------------------------------------------------------------------
// Regularized KL projection onto a log-linear family (theta coordinates)

/// f(theta) = psi(theta) + phi - <theta, eta_hat>
///            + lambda1 * sum_{|A|=1} theta_A^2 + lambda2 * sum_{|A|>=2} theta_A^2
/// where phi makes f the KL divergence from the target to the model.
struct KLProjectionObjective {
  SubsetIndex index;
  Vector target_moments;  // eta_hat over `index`
  double target_potential = 0.0;  // phi
  double lambda1 = 0.0;
  double lambda2 = 0.0;

  /// Target given as a log-linear distribution over any index on the same
  /// variables; phi is its negative entropy.
  static KLProjectionObjective from_target(const LogLinearModel& target, SubsetIndex index,
                                           double lambda1, double lambda2);
  /// Target given by moments inside the model family's polytope; phi is the
  /// Legendre dual potential at eta_hat.
  static KLProjectionObjective from_moments(SubsetIndex index, Vector eta_hat, double lambda1,
                                            double lambda2);

  /// Per-coordinate regularization weight lambda_A.
  Vector lambda_weights() const;
};

Evaluation kl_objective_eval(const KLProjectionObjective& obj, std::span<const double> theta);

/// Analytic Jacobian of a = G^{-1} grad f:
/// J_ij = [G^{-1}((G + 2 diag(lambda)) e_i - T(e_i, ., a))]_j.
Matrix kl_grad_field_jacobian(const KLProjectionObjective& obj, std::span<const double> theta);

Objective make_objective(const KLProjectionObjective& obj);

// ---------------------------------------------------------------------------
// alpha-divergence between diagonal Gaussians in (mu, sigma) coordinates

/// D(p || q) with p = N((mu1, mu2), diag(s1^2, s2^2)) fixed and
/// q = N((mu, mu), sigma^2 I) the model.
struct AlphaDivergenceObjective {
  double alpha_bar = 3.0;
  double mu1 = 2.0;
  double mu2 = 1.5;
  double sigma1 = 1.3;
  double sigma2 = 0.7;

  /// True when both variance factors (1+a)/2 s^2 + (1-a)/2 s_i^2 are positive.
  bool integrable(double sigma) const;
};

enum class GradientMode { Analytic, FiniteDifference };

/// Closed-form value. Throws DivergenceUndefined outside the integrable region.
double alpha_divergence_value(const AlphaDivergenceObjective& obj, double mu, double sigma);

Evaluation alpha_divergence_eval(const AlphaDivergenceObjective& obj, double mu, double sigma,
                                 GradientMode mode = GradientMode::Analytic);

/// Euclidean Hessian [[f_mm, f_ms], [f_sm, f_ss]] of the closed form.
Matrix alpha_divergence_hessian(const AlphaDivergenceObjective& obj, double mu, double sigma);

Objective make_objective(const AlphaDivergenceObjective& obj,
                         GradientMode mode = GradientMode::Analytic);

// ---------------------------------------------------------------------------
// Beta mixture negative log-likelihood in shape coordinates

struct BetaMixtureNLL {
  Vector weights;
  Vector points;  // (x1, x2) pairs flattened, all strictly inside (0,1)^2

  std::size_t size() const { return points.size() / 2; }
  /// Throws DomainViolation for points outside the open unit square.
  void validate() const;
};

Evaluation beta_nll_eval(const BetaMixtureNLL& obj, std::span<const double> shapes);

Objective make_objective(const BetaMixtureNLL& obj);

}  // namespace dualnewton
