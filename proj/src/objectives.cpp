#include "dualnewton/objectives.hpp"

#include <cmath>

#include "dualnewton/kernels.hpp"

namespace dualnewton {

bool Objective::contains(std::span<const double> xi) const {
  if (xi.size() != dim || !all_finite(xi)) return false;
  return !in_domain || in_domain(xi);
}

GradientField make_gradient_field(const DualStructure& ds, const Objective& obj) {
  GradientField field;
  field.value = [&ds, &obj](std::span<const double> xi) {
    return riemannian_gradient(ds, obj.gradient(xi), xi);
  };
  field.jacobian = obj.grad_field_jacobian;
  return field;
}

// ---------------------------------------------------------------------------
// KL projection

KLProjectionObjective KLProjectionObjective::from_target(const LogLinearModel& target,
                                                         SubsetIndex index, double lambda1,
                                                         double lambda2) {
  KLProjectionObjective obj;
  obj.target_moments = loglinear_moments(target, index);
  obj.target_potential = kernels::loglinear_negative_entropy(
      target.index.n_vars(), target.index.masks(), target.theta);
  obj.index = std::move(index);
  obj.lambda1 = lambda1;
  obj.lambda2 = lambda2;
  return obj;
}

KLProjectionObjective KLProjectionObjective::from_moments(SubsetIndex index, Vector eta_hat,
                                                          double lambda1, double lambda2) {
  const Vector theta_hat = loglinear_theta_from_eta(index, eta_hat);
  KLProjectionObjective obj;
  obj.target_potential =
      dot(theta_hat, eta_hat) - loglinear_log_partition(LogLinearModel{index, theta_hat});
  obj.index = std::move(index);
  obj.target_moments = std::move(eta_hat);
  obj.lambda1 = lambda1;
  obj.lambda2 = lambda2;
  return obj;
}

Vector KLProjectionObjective::lambda_weights() const {
  Vector w(index.size());
  for (std::size_t a = 0; a < index.size(); ++a) w[a] = index.order(a) == 1 ? lambda1 : lambda2;
  return w;
}

Evaluation kl_objective_eval(const KLProjectionObjective& obj, std::span<const double> theta) {
  const std::size_t m = obj.index.size();
  if (theta.size() != m || obj.target_moments.size() != m) {
    throw NumericError(ErrorKind::DimensionMismatch, "kl_objective_eval");
  }
  const auto stats = kernels::loglinear_stats(obj.index.n_vars(), obj.index.masks(), theta,
                                              obj.index.masks(), kernels::MomentOrder::Mean);
  const Vector lambda = obj.lambda_weights();
  CompensatedSum f;
  f += stats.log_partition;
  f += obj.target_potential;
  Evaluation out;
  out.grad.resize(m);
  for (std::size_t a = 0; a < m; ++a) {
    f += -theta[a] * obj.target_moments[a];
    f += lambda[a] * theta[a] * theta[a];
    out.grad[a] = stats.mean[a] - obj.target_moments[a] + 2.0 * lambda[a] * theta[a];
  }
  out.value = f.value();
  return out;
}

Matrix kl_grad_field_jacobian(const KLProjectionObjective& obj, std::span<const double> theta) {
  const std::size_t m = obj.index.size();
  const auto stats = kernels::loglinear_stats(obj.index.n_vars(), obj.index.masks(), theta,
                                              obj.index.masks(),
                                              kernels::MomentOrder::ThirdCentral);
  const Vector lambda = obj.lambda_weights();
  Vector grad(m);
  for (std::size_t a = 0; a < m; ++a) {
    grad[a] = stats.mean[a] - obj.target_moments[a] + 2.0 * lambda[a] * theta[a];
  }
  const Cholesky chol(stats.covariance);
  const Vector a = chol.solve(grad);
  Matrix jac(m, m);
  Vector rhs(m);
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      CompensatedSum s;
      s += stats.covariance(j, i);
      if (i == j) s += 2.0 * lambda[i];
      for (std::size_t k = 0; k < m; ++k) s += -stats.third(i, j, k) * a[k];
      rhs[j] = s.value();
    }
    const Vector row = chol.solve(rhs);
    for (std::size_t j = 0; j < m; ++j) jac(i, j) = row[j];
  }
  return jac;
}

Objective make_objective(const KLProjectionObjective& obj) {
  Objective out;
  out.dim = obj.index.size();
  out.evaluate = [obj](std::span<const double> theta) { return kl_objective_eval(obj, theta); };
  out.grad_field_jacobian = [obj](std::span<const double> theta) {
    return kl_grad_field_jacobian(obj, theta);
  };
  return out;
}

// ---------------------------------------------------------------------------
// alpha-divergence
//
// With a = (1+alpha_bar)/2, b = (1-alpha_bar)/2, v_i = a sigma^2 + b s_i^2 and
// d_i = mu_i - mu, the closed form is f = (1 - I) / (a b) with
//   log I = b log(s1 s2) + 2a log sigma - 1/2 sum log v_i - (ab/2) sum d_i^2 / v_i.

namespace {

struct AlphaTerms {
  double a, b;
  double v[2];
  double d[2];
  double log_i;
};

AlphaTerms alpha_terms(const AlphaDivergenceObjective& obj, double mu, double sigma) {
  if (std::abs(obj.alpha_bar) == 1.0) {
    throw NumericError(ErrorKind::DivergenceUndefined, "closed form needs |alpha_bar| != 1");
  }
  if (!(sigma > 0.0) || !std::isfinite(mu) || !std::isfinite(sigma)) {
    throw NumericError(ErrorKind::DomainViolation, "sigma must be positive");
  }
  AlphaTerms t{};
  t.a = 0.5 * (1.0 + obj.alpha_bar);
  t.b = 0.5 * (1.0 - obj.alpha_bar);
  const double s_i[2] = {obj.sigma1, obj.sigma2};
  const double mu_i[2] = {obj.mu1, obj.mu2};
  for (int i = 0; i < 2; ++i) {
    t.v[i] = t.a * sigma * sigma + t.b * s_i[i] * s_i[i];
    if (!(t.v[i] > 0.0)) {
      throw NumericError(ErrorKind::DivergenceUndefined, "integrability condition fails");
    }
    t.d[i] = mu_i[i] - mu;
  }
  t.log_i = t.b * std::log(obj.sigma1 * obj.sigma2) + 2.0 * t.a * std::log(sigma) -
            0.5 * (std::log(t.v[0]) + std::log(t.v[1])) -
            0.5 * t.a * t.b * (t.d[0] * t.d[0] / t.v[0] + t.d[1] * t.d[1] / t.v[1]);
  return t;
}

}  // namespace

bool AlphaDivergenceObjective::integrable(double sigma) const {
  const double a = 0.5 * (1.0 + alpha_bar);
  const double b = 0.5 * (1.0 - alpha_bar);
  return sigma > 0.0 && a * sigma * sigma + b * sigma1 * sigma1 > 0.0 &&
         a * sigma * sigma + b * sigma2 * sigma2 > 0.0;
}

double alpha_divergence_value(const AlphaDivergenceObjective& obj, double mu, double sigma) {
  const AlphaTerms t = alpha_terms(obj, mu, sigma);
  return -std::expm1(t.log_i) / (t.a * t.b);
}

Evaluation alpha_divergence_eval(const AlphaDivergenceObjective& obj, double mu, double sigma,
                                 GradientMode mode) {
  const AlphaTerms t = alpha_terms(obj, mu, sigma);
  Evaluation out;
  out.value = -std::expm1(t.log_i) / (t.a * t.b);
  if (mode == GradientMode::FiniteDifference) {
    const Vector x{mu, sigma};
    out.grad = fd_gradient(
        [&obj](std::span<const double> p) { return alpha_divergence_value(obj, p[0], p[1]); }, x);
    return out;
  }
  const double a = t.a, b = t.b;
  double l_mu = 0.0, inv_v = 0.0, d2_v2 = 0.0;
  for (int i = 0; i < 2; ++i) {
    l_mu += a * b * t.d[i] / t.v[i];
    inv_v += 1.0 / t.v[i];
    d2_v2 += t.d[i] * t.d[i] / (t.v[i] * t.v[i]);
  }
  const double l_sigma = 2.0 * a / sigma - a * sigma * inv_v + a * a * b * sigma * d2_v2;
  // f = (1 - I)/(ab)  =>  df = -I dL / (ab)
  const double scale = -std::exp(t.log_i) / (a * b);
  out.grad = {scale * l_mu, scale * l_sigma};
  return out;
}

Matrix alpha_divergence_hessian(const AlphaDivergenceObjective& obj, double mu, double sigma) {
  const AlphaTerms t = alpha_terms(obj, mu, sigma);
  const double a = t.a, b = t.b, s = sigma;
  double l_mu = 0.0, inv_v = 0.0, inv_v2 = 0.0, d_v2 = 0.0, d2_v2 = 0.0, d2_v3 = 0.0;
  for (int i = 0; i < 2; ++i) {
    const double v = t.v[i], d = t.d[i];
    l_mu += a * b * d / v;
    inv_v += 1.0 / v;
    inv_v2 += 1.0 / (v * v);
    d_v2 += d / (v * v);
    d2_v2 += d * d / (v * v);
    d2_v3 += d * d / (v * v * v);
  }
  const double l_sigma = 2.0 * a / s - a * s * inv_v + a * a * b * s * d2_v2;
  const double l_mm = -a * b * inv_v;
  const double l_ms = -2.0 * a * a * b * s * d_v2;
  const double l_ss = -2.0 * a / (s * s) - a * inv_v + 2.0 * a * a * s * s * inv_v2 +
                      a * a * b * d2_v2 - 4.0 * a * a * a * b * s * s * d2_v3;
  const double scale = -std::exp(t.log_i) / (a * b);
  return Matrix{{scale * (l_mu * l_mu + l_mm), scale * (l_mu * l_sigma + l_ms)},
                {scale * (l_mu * l_sigma + l_ms), scale * (l_sigma * l_sigma + l_ss)}};
}

Objective make_objective(const AlphaDivergenceObjective& obj, GradientMode mode) {
  Objective out;
  out.dim = 2;
  out.evaluate = [obj, mode](std::span<const double> xi) {
    return alpha_divergence_eval(obj, xi[0], xi[1], mode);
  };
  if (mode == GradientMode::Analytic) {
    // a = (s^2/2 f_mu, s^2/4 f_sigma) under G = diag(2/s^2, 4/s^2).
    out.grad_field_jacobian = [obj](std::span<const double> xi) {
      const double s = xi[1];
      const Vector g = alpha_divergence_eval(obj, xi[0], s).grad;
      const Matrix h = alpha_divergence_hessian(obj, xi[0], s);
      return Matrix{{0.5 * s * s * h(0, 0), 0.25 * s * s * h(1, 0)},
                    {s * g[0] + 0.5 * s * s * h(0, 1), 0.5 * s * g[1] + 0.25 * s * s * h(1, 1)}};
    };
  }
  out.in_domain = [obj](std::span<const double> xi) { return obj.integrable(xi[1]); };
  return out;
}

// ---------------------------------------------------------------------------
// Beta mixture likelihood

void BetaMixtureNLL::validate() const {
  if (points.size() % 2 != 0) {
    throw NumericError(ErrorKind::DimensionMismatch, "points must be (x1, x2) pairs");
  }
  for (double x : points) {
    if (!(x > 0.0 && x < 1.0)) {
      throw NumericError(ErrorKind::DomainViolation, "data must lie strictly inside (0,1)^2");
    }
  }
}

Evaluation beta_nll_eval(const BetaMixtureNLL& obj, std::span<const double> shapes) {
  const kernels::LikelihoodValue v =
      kernels::beta_mixture_nll({obj.weights, shapes}, obj.points);
  return Evaluation{v.nll, v.gradient};
}

Objective make_objective(const BetaMixtureNLL& obj) {
  obj.validate();
  Objective out;
  out.dim = 2 * obj.weights.size();
  out.evaluate = [obj](std::span<const double> shapes) { return beta_nll_eval(obj, shapes); };
  out.in_domain = [](std::span<const double> xi) {
    for (double v : xi)
      if (!(v > 0.0)) return false;
    return true;
  };
  return out;
}

}  // namespace dualnewton
