#include "dualnewton/validation.hpp"

#include <cmath>
#include <random>

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/special_functions/trigamma.hpp>

#include "dualnewton/models.hpp"
#include "dualnewton/objectives.hpp"
#include "dualnewton/optimizers.hpp"

namespace dualnewton {

namespace {

constexpr double kAlphas[] = {-1.0, -0.5, 0.0, 0.5, 1.0};

class Checks {
 public:
  void at_most(std::string name, double residual, double tol) {
    out_.push_back({std::move(name), residual < tol, residual, tol, "max"});
  }
  void at_least(std::string name, double residual, double tol) {
    out_.push_back({std::move(name), residual >= tol, residual, tol, "min"});
  }
  std::vector<CheckResult> take() { return std::move(out_); }

 private:
  std::vector<CheckResult> out_;
};

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).max_abs(); }

double tensor_diff(const ChristoffelTensor& a, const ChristoffelTensor& b) {
  double m = 0.0;
  for (std::size_t i = 0; i < a.data().size(); ++i) {
    m = std::max(m, std::abs(a.data()[i] - b.data()[i]));
  }
  return m;
}

Matrix times_transpose(const Matrix& g, const Matrix& h) { return g * h.transpose(); }

double asymmetry(const Matrix& m) {
  return max_abs_diff(m, m.transpose()) / std::max(m.max_abs(), 1e-300);
}

/// Relative gradient error against central differences of the value.
double gradient_error(const Objective& obj, std::span<const double> x) {
  const Vector g = obj.gradient(x);
  const Vector fd = fd_gradient([&](std::span<const double> p) { return obj.value(p); }, x);
  double diff = 0.0;
  for (std::size_t i = 0; i < g.size(); ++i) diff = std::max(diff, std::abs(g[i] - fd[i]));
  return diff / std::max(1.0, norm_inf(fd));
}

KLProjectionObjective boltzmann_problem(std::size_t n, double l1, double l2, std::mt19937_64& rng) {
  const SubsetIndex full = SubsetIndex::full(n);
  Vector theta(full.size());
  for (std::size_t a = 0; a < full.size(); ++a) {
    const double s = 1.0 / static_cast<double>(full.order(a));
    theta[a] = std::uniform_real_distribution<double>(-s, s)(rng);
  }
  return KLProjectionObjective::from_target({full, theta}, SubsetIndex::boltzmann(n), l1, l2);
}

Vector uniform_vector(std::size_t n, double lo, double hi, std::mt19937_64& rng) {
  Vector v(n);
  for (double& x : v) x = std::uniform_real_distribution<double>(lo, hi)(rng);
  return v;
}

/// One-dimensional factor of the alpha-divergence integral.
double alpha_integral_1d(double alpha_bar, double mu_p, double s_p, double mu_q, double s_q) {
  const double a = 0.5 * (1.0 + alpha_bar), b = 0.5 * (1.0 - alpha_bar);
  auto log_normal = [](double x, double m, double s) {
    return -0.5 * std::log(2.0 * M_PI) - std::log(s) - 0.5 * (x - m) * (x - m) / (s * s);
  };
  auto f = [&](double x) { return std::exp(a * log_normal(x, mu_p, s_p) + b * log_normal(x, mu_q, s_q)); };
  return boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
      f, -std::numeric_limits<double>::infinity(), std::numeric_limits<double>::infinity(), 15,
      1e-13);
}

}  // namespace

std::vector<CheckResult> validation_checks(const ValidationOptions& opt) {
  Checks checks;
  std::mt19937_64 rng(opt.seed);

  // --- Gaussian model ------------------------------------------------------
  {
    double duality = 0.0, levi = 0.0, sym = 0.0;
    for (std::size_t p = 0; p < opt.points; ++p) {
      const Vector xi{std::uniform_real_distribution<double>(-2.0, 2.0)(rng),
                      std::uniform_real_distribution<double>(0.5, 3.0)(rng)};
      for (double alpha : kAlphas) {
        const DualStructure ds = gaussian_dual_structure(alpha);
        duality = std::max(duality, duality_residual(ds, xi));
        sym = std::max(sym, ds.gamma(xi).max_asymmetry());
      }
      levi = std::max(levi, tensor_diff(gaussian_christoffel({xi[0], xi[1]}, 0.0),
                                        levi_civita_from_metric(gaussian_dual_structure(0).metric, xi)));
    }
    checks.at_most("duality.gaussian", duality, 1e-5);
    checks.at_most("christoffel.gaussian.levi_civita", levi, 1e-5);
    checks.at_most("christoffel.gaussian.symmetry", sym, 1e-15);
  }

  // --- Log-linear model ------------------------------------------------------
  {
    const SubsetIndex index = SubsetIndex::boltzmann(3);
    double duality = 0.0, levi = 0.0, flat = 0.0;
    for (std::size_t p = 0; p < opt.points; ++p) {
      const Vector theta = uniform_vector(index.size(), -1.0, 1.0, rng);
      for (double alpha : kAlphas) {
        duality = std::max(duality, duality_residual(loglinear_dual_structure(index, alpha), theta));
      }
      const LogLinearModel model{index, theta};
      flat = std::max(flat, loglinear_christoffel(model, 1.0).max_abs());
      levi = std::max(levi, tensor_diff(loglinear_christoffel(model, 0.0),
                                        levi_civita_from_metric(
                                            loglinear_dual_structure(index, 0.0).metric, theta)));
    }
    checks.at_most("duality.loglinear", duality, 1e-5);
    checks.at_most("christoffel.loglinear.levi_civita", levi, 1e-5);
    // Exactly zero: the alpha = 1 symbols are never formed from moments.
    checks.at_most("christoffel.loglinear.alpha1_zero", flat, 1e-300);
  }

  // --- Beta mixture ----------------------------------------------------------
  BetaMixtureModel mixture{{0.35, 0.4, 0.25}, {2.0, 5.0, 3.0, 2.0, 5.0, 3.5},
                           QuadratureRule::graded_gauss_legendre(opt.quad_nodes)};
  {
    double duality = 0.0, levi = 0.0, sym = 0.0;
    for (std::size_t p = 0; p < opt.beta_points; ++p) {
      Vector shapes = mixture.shapes;
      for (double& s : shapes) s *= std::uniform_real_distribution<double>(0.8, 1.2)(rng);
      for (double alpha : kAlphas) {
        const DualStructure ds = beta_mixture_dual_structure(mixture, alpha);
        duality = std::max(duality, duality_residual(ds, shapes));
        sym = std::max(sym, ds.gamma(shapes).max_asymmetry());
      }
      const DualStructure lc = beta_mixture_dual_structure(mixture, 0.0);
      levi = std::max(levi, tensor_diff(lc.gamma(shapes), levi_civita_from_metric(lc.metric, shapes)));
    }
    checks.at_most("duality.beta_mixture", duality, 1e-3);
    checks.at_most("christoffel.beta_mixture.levi_civita", levi, 1e-3);
    checks.at_most("christoffel.beta_mixture.symmetry", sym, 1e-8);

    double fisher = 0.0;
    for (const auto& [a, b] : {std::pair{2.0, 5.0}, {3.0, 2.0}, {5.0, 3.5}}) {
      BetaMixtureModel one{{1.0}, {a, b}, QuadratureRule::graded_gauss_legendre(opt.quad_nodes)};
      using boost::math::trigamma;
      const double tab = trigamma(a + b);
      const Matrix closed{{2.0 * (trigamma(a) - tab), -2.0 * tab},
                          {-2.0 * tab, 2.0 * (trigamma(b) - tab)}};
      const Vector shapes{a, b};
      fisher = std::max(fisher, max_abs_diff(beta_mixture_fisher(one, shapes), closed) /
                                    closed.max_abs());
    }
    checks.at_most("fisher.beta_single_component.trigamma", fisher, 1e-4);
  }

  // --- KL projection identities (alpha = 1 retraction) ------------------------
  {
    double hess_pure = 0.0, hess_reg = 0.0, dir_pure = 0.0, dir_reg = 1e300;
    double reg_identity = 0.0, unit_identity = 0.0, sym = 0.0;
    for (std::size_t p = 0; p < opt.points; ++p) {
      const KLProjectionObjective pure = boltzmann_problem(3, 0.0, 0.0, rng);
      KLProjectionObjective reg = pure;
      reg.lambda1 = 0.3;
      reg.lambda2 = 0.8;
      KLProjectionObjective unit = pure;
      unit.lambda1 = unit.lambda2 = 1.0;
      const Vector theta = uniform_vector(pure.index.size(), -1.0, 1.0, rng);
      const DualStructure ds = loglinear_dual_structure(pure.index, 1.0);
      const Matrix g = ds.metric(theta);

      auto gh = [&](const KLProjectionObjective& kl) {
        const Objective obj = make_objective(kl);
        return times_transpose(g, dual_hessian_matrix(ds, make_gradient_field(ds, obj), theta));
      };
      auto fd_hess = [&](const KLProjectionObjective& kl) {
        return fd_jacobian([&](std::span<const double> t) { return kl_objective_eval(kl, t).grad; },
                           theta);
      };
      const Matrix h_pure = fd_hess(pure), h_reg = fd_hess(reg);
      hess_pure = std::max(hess_pure, (gh(pure) - h_pure).norm_inf() / h_pure.norm_inf());
      hess_reg = std::max(hess_reg, (gh(reg) - h_reg).norm_inf() / h_reg.norm_inf());

      Matrix lam = Matrix::diagonal(scaled(2.0, reg.lambda_weights()));
      reg_identity = std::max(reg_identity, max_abs_diff(gh(reg) - g, lam));
      unit_identity = std::max(unit_identity,
                               max_abs_diff(gh(unit) - g, 2.0 * Matrix::identity(g.rows())));

      for (const KLProjectionObjective* kl : std::initializer_list<const KLProjectionObjective*>{&pure, &reg}) {
        const Objective obj = make_objective(*kl);
        const Vector grad = obj.gradient(theta);
        const Matrix h = dual_hessian_matrix(ds, make_gradient_field(ds, obj), theta);
        const Vector beta = newton_direction(ds, h, grad, theta).beta;
        const Vector ng = scaled(-1.0, riemannian_gradient(ds, grad, theta));
        const double rel = norm2(axpy(-1.0, ng, beta)) / norm2(ng);
        if (kl == &pure) {
          dir_pure = std::max(dir_pure, rel);
        } else {
          dir_reg = std::min(dir_reg, rel);
        }
      }

      // G H*^T is symmetric for every alpha on this chart.
      for (double alpha : kAlphas) {
        const DualStructure dsa = loglinear_dual_structure(pure.index, alpha);
        const Objective obj = make_objective(reg);
        sym = std::max(sym, asymmetry(times_transpose(
                                dsa.metric(theta),
                                dual_hessian_matrix(dsa, make_gradient_field(dsa, obj), theta))));
      }
    }
    checks.at_most("hessian_identity.pure", hess_pure, 1e-5);
    checks.at_most("hessian_identity.regularized", hess_reg, 1e-5);
    checks.at_most("kl_direction.pure_equivalence", dir_pure, 1e-8);
    checks.at_least("kl_direction.regularized_differs", dir_reg, 1e-3);
    checks.at_most("regularizer_identity.weighted", reg_identity, 1e-6);
    checks.at_most("regularizer_identity.unit", unit_identity, 1e-6);
    checks.at_most("hessian_symmetry.loglinear", sym, 1e-6);
  }

  // --- alpha-divergence objective --------------------------------------------
  {
    const AlphaDivergenceObjective ad;
    const Objective obj = make_objective(ad);
    double grad = 0.0, sym = 0.0;
    for (std::size_t p = 0; p < opt.points; ++p) {
      const Vector xi{std::uniform_real_distribution<double>(0.0, 3.0)(rng),
                      std::uniform_real_distribution<double>(1.0, 2.5)(rng)};
      grad = std::max(grad, gradient_error(obj, xi));
      for (double alpha : kAlphas) {
        const DualStructure ds = gaussian_dual_structure(alpha);
        sym = std::max(sym, asymmetry(times_transpose(
                                ds.metric(xi), dual_hessian_matrix(ds, make_gradient_field(ds, obj), xi))));
      }
    }
    checks.at_most("gradient.alpha_divergence", grad, 1e-6);
    checks.at_most("hessian_symmetry.gaussian", sym, 1e-6);

    const double mu = 1.75, sigma = 1.0;
    const double integral = alpha_integral_1d(ad.alpha_bar, ad.mu1, ad.sigma1, mu, sigma) *
                            alpha_integral_1d(ad.alpha_bar, ad.mu2, ad.sigma2, mu, sigma);
    const double quad = 4.0 / (1.0 - ad.alpha_bar * ad.alpha_bar) * (1.0 - integral);
    checks.at_most("alpha_divergence.closed_form_vs_quadrature",
                   std::abs(alpha_divergence_value(ad, mu, sigma) - quad) / std::abs(quad), 1e-6);
  }

  // --- KL and Beta-mixture gradients -----------------------------------------
  {
    double kl_grad = 0.0;
    for (std::size_t p = 0; p < opt.points; ++p) {
      const KLProjectionObjective kl = boltzmann_problem(4, 0.5, 0.5, rng);
      kl_grad = std::max(kl_grad, gradient_error(make_objective(kl),
                                                 uniform_vector(kl.index.size(), -1.0, 1.0, rng)));
    }
    checks.at_most("gradient.kl_projection", kl_grad, 1e-6);

    const BetaMixtureNLL nll{mixture.weights, beta_mixture_sample(mixture, 500, opt.seed)};
    const Objective obj = make_objective(nll);
    double beta_grad = 0.0, sym = 0.0;
    for (std::size_t p = 0; p < opt.beta_points; ++p) {
      Vector shapes = mixture.shapes;
      for (double& s : shapes) s *= std::uniform_real_distribution<double>(0.7, 1.3)(rng);
      beta_grad = std::max(beta_grad, gradient_error(obj, shapes));
      const DualStructure ds = beta_mixture_dual_structure(mixture, 0.5);
      sym = std::max(sym, asymmetry(times_transpose(
                              ds.metric(shapes),
                              dual_hessian_matrix(ds, make_gradient_field(ds, obj), shapes,
                                                  JacobianMode::FiniteDifference))));
    }
    checks.at_most("gradient.beta_mixture_nll", beta_grad, 1e-6);
    checks.at_most("hessian_symmetry.beta_mixture", sym, 1e-6);
  }

  return checks.take();
}

json validation_report(const std::vector<CheckResult>& checks) {
  json list = json::array();
  bool all = true;
  for (const auto& c : checks) {
    all = all && c.passed;
    list.push_back({{"name", c.name},
                    {"passed", c.passed},
                    {"residual", c.residual},
                    {"tolerance", c.tolerance},
                    {"sense", c.sense}});
  }
  return json{{"passed", all}, {"checks", list}};
}

}  // namespace dualnewton
