#include <doctest.h>

#include <cmath>
#include <random>

#include "dualnewton/geometry.hpp"
#include "dualnewton/models.hpp"
#include "dualnewton/objectives.hpp"

using namespace dualnewton;

namespace {

DualStructure flat_structure(std::size_t n) {
  DualStructure ds;
  ds.dim = n;
  ds.metric = [n](std::span<const double>) { return Matrix::identity(n); };
  ds.gamma = [n](std::span<const double>) { return ChristoffelTensor(n); };
  ds.gamma_dual = ds.gamma;
  return ds;
}

// Bernoulli model in theta: eta = sigmoid(theta).
double sigmoid(double t) { return 1.0 / (1.0 + std::exp(-t)); }

}  // namespace

TEST_CASE("riemannian_gradient") {
  const DualStructure gauss = gaussian_dual_structure(0.0);
  const Vector xi{0.3, 2.0};
  CHECK(riemannian_gradient(gauss, Vector{0, 0}, xi) == Vector{0, 0});
  const Vector a = riemannian_gradient(gauss, Vector{1, 2}, xi);
  CHECK(a[0] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(a[1] == doctest::Approx(2.0).epsilon(1e-14));
  CHECK(riemannian_gradient(flat_structure(3), Vector{1, -2, 3}, Vector{0, 0, 0}) ==
        Vector{1, -2, 3});
}

TEST_CASE("dual_hessian_matrix trivial cases") {
  const DualStructure ds = flat_structure(2);
  const Matrix j{{1.0, 2.0}, {-0.5, 3.0}};
  GradientField linear;
  // a(x) = J^T x so that d a_j / d x_i = J_ij.
  linear.value = [&](std::span<const double> x) { return j.transpose() * x; };
  const Vector x{0.4, -1.1};
  CHECK((dual_hessian_matrix(ds, linear, x, JacobianMode::FiniteDifference) - j).max_abs() < 1e-9);

  GradientField zero;
  zero.value = [](std::span<const double>) { return Vector{0.0, 0.0}; };
  CHECK(dual_hessian_matrix(ds, zero, x).max_abs() == 0.0);
}

TEST_CASE("dual_hessian_matrix matches an independent assembly on the Gaussian model") {
  const AlphaDivergenceObjective ad;
  const Objective obj = make_objective(ad);
  std::mt19937_64 rng(17);
  for (int trial = 0; trial < 10; ++trial) {
    const double alpha = std::uniform_real_distribution<double>(-1, 1)(rng);
    const Vector xi{std::uniform_real_distribution<double>(0, 3)(rng),
                    std::uniform_real_distribution<double>(1, 2.5)(rng)};
    const DualStructure ds = gaussian_dual_structure(alpha);
    auto a_of = [&](std::span<const double> p) {
      const double s = p[1];
      const Vector g = obj.gradient(p);
      return Vector{s * s / 2.0 * g[0], s * s / 4.0 * g[1]};
    };
    const Matrix jac = fd_jacobian(a_of, xi);
    const Vector a = a_of(xi);
    // Gamma*(i, k, j) at -alpha, written out from the closed form.
    const double s = xi[1], b = -alpha;
    const double g1[2][2] = {{0, -(1 + b) / s}, {-(1 + b) / s, 0}};
    const double g2[2][2] = {{(1 - b) / (2 * s), 0}, {0, -(1 + 2 * b) / s}};
    Matrix expect = jac;
    for (int i = 0; i < 2; ++i)
      for (int k = 0; k < 2; ++k) {
        expect(i, 0) += a[k] * g1[i][k];
        expect(i, 1) += a[k] * g2[i][k];
      }
    const GradientField field = make_gradient_field(ds, obj);
    const Matrix analytic = dual_hessian_matrix(ds, field, xi, JacobianMode::Analytic);
    const Matrix fd = dual_hessian_matrix(ds, field, xi, JacobianMode::FiniteDifference);
    CHECK((analytic - expect).max_abs() < 1e-6 * std::max(1.0, expect.max_abs()));
    CHECK((fd - expect).max_abs() < 1e-6 * std::max(1.0, expect.max_abs()));
  }
}

TEST_CASE("newton_direction") {
  const DualStructure gauss = gaussian_dual_structure(0.3);
  const NewtonStep zero = newton_direction(gauss, Matrix{{3, 1}, {0, 2}}, Vector{0, 0}, Vector{0, 1});
  CHECK(zero.beta == Vector{0.0, 0.0});

  // 1-D Boltzmann projection: eta_hat = 0.5, lambda = 0.5, theta = 1, alpha = 1.
  const KLProjectionObjective kl =
      KLProjectionObjective::from_moments(SubsetIndex::boltzmann(1), Vector{0.5}, 0.5, 0.5);
  const DualStructure ds = loglinear_dual_structure(kl.index, 1.0);
  const Objective obj = make_objective(kl);
  const Vector theta{1.0};
  const Matrix g = ds.metric(theta);
  const Vector grad = obj.gradient(theta);
  const Matrix h = dual_hessian_matrix(ds, make_gradient_field(ds, obj), theta);
  // Oracle values from sigmoid arithmetic at 30 digits.
  CHECK(g(0, 0) == doctest::Approx(0.196611933241481852).epsilon(1e-14));
  CHECK(grad[0] == doctest::Approx(1.231058578630004879).epsilon(1e-14));
  CHECK(h(0, 0) == doctest::Approx(6.086161269630487557).epsilon(1e-12));
  const NewtonStep step = newton_direction(ds, h, grad, theta);
  CHECK(step.beta[0] == doctest::Approx(-1.028786814197323848).epsilon(1e-12));
  CHECK(step.spd);

  CHECK_THROWS_AS(newton_direction(ds, Matrix{{0.0}}, grad, theta), NumericError);
}

TEST_CASE("an SPD-certified Newton step descends") {
  std::mt19937_64 rng(23);
  std::normal_distribution<double> z;
  for (int trial = 0; trial < 20; ++trial) {
    Matrix b(3, 3), c(3, 3);
    for (auto& v : b.data()) v = z(rng);
    for (auto& v : c.data()) v = z(rng);
    const Matrix metric = b * b.transpose() + 0.5 * Matrix::identity(3);
    const Matrix hess = c * c.transpose() + 0.1 * Matrix::identity(3);
    DualStructure ds = flat_structure(3);
    ds.metric = [metric](std::span<const double>) { return metric; };
    // H*^T = G^{-1} Hess, column by column.
    Matrix ht(3, 3);
    for (std::size_t j = 0; j < 3; ++j) {
      Vector col(3);
      for (std::size_t i = 0; i < 3; ++i) col[i] = hess(i, j);
      const Vector x = solve_spd(metric, col);
      for (std::size_t i = 0; i < 3; ++i) ht(i, j) = x[i];
    }
    const Vector grad{z(rng), z(rng), z(rng)};
    const NewtonStep st = newton_direction(ds, ht.transpose(), grad, Vector{0, 0, 0});
    CHECK(st.spd);
    CHECK(dot(grad, st.beta) < 0.0);
  }
}

TEST_CASE("second_order_retract") {
  const DualStructure gauss = gaussian_dual_structure(0.0);
  const Vector xi{0.0, 1.0};
  CHECK(second_order_retract(gauss, xi, Vector{0, 0}) == xi);
  CHECK(second_order_retract(flat_structure(2), Vector{1, 2}, Vector{0.5, -1}) == Vector{1.5, 1.0});

  // Only Gamma^2_11 = (1 - alpha)/(2 sigma) = 0.5 contributes: 1 - 0.5 * 0.5 * 0.01.
  const Vector next = second_order_retract(gauss, xi, Vector{0.1, 0.0});
  CHECK(next[0] == doctest::Approx(0.1).epsilon(1e-15));
  CHECK(next[1] == doctest::Approx(0.9975).epsilon(1e-15));

  // alpha = -1: sigma' = 1 + b - b^2 / 2, negative at b = -2 and -1, positive at -0.5.
  const DualStructure m1 = gaussian_dual_structure(-1.0);
  CHECK_THROWS_AS(second_order_retract(m1, xi, Vector{0.0, -2.0}), NumericError);
  const RetractResult r = retract_with_halving(m1, xi, Vector{0.0, -2.0});
  CHECK(r.halvings == 2);
  CHECK(r.step[1] == -0.5);
  CHECK(r.point[1] == doctest::Approx(0.375).epsilon(1e-15));
}

TEST_CASE("retraction has derivative beta at t = 0") {
  std::mt19937_64 rng(29);
  for (double alpha : {-1.0, 0.0, 0.5}) {
    const DualStructure ds = gaussian_dual_structure(alpha);
    const Vector xi{0.2, 1.3};
    const Vector beta{std::normal_distribution<double>()(rng), std::normal_distribution<double>()(rng)};
    const double t = 1e-6;
    const Vector plus = second_order_retract(ds, xi, scaled(t, beta));
    const Vector minus = second_order_retract(ds, xi, scaled(-t, beta));
    for (std::size_t i = 0; i < 2; ++i) {
      CHECK((plus[i] - minus[i]) / (2 * t) == doctest::Approx(beta[i]).epsilon(1e-8));
    }
  }
}

TEST_CASE("levi_civita_from_metric") {
  const ChristoffelTensor zero =
      levi_civita_from_metric([](std::span<const double>) { return Matrix{{2, 1}, {1, 3}}; },
                              Vector{0.3, 0.7});
  CHECK(zero.max_abs() < 1e-12);

  // Gaussian, sigma = 1, alpha = 0 closed form.
  const ChristoffelTensor lc =
      levi_civita_from_metric(gaussian_dual_structure(0).metric, Vector{0.4, 1.0});
  CHECK(lc(0, 0, 0) == doctest::Approx(0.0).epsilon(1e-5));
  CHECK(lc(0, 1, 0) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(lc(1, 0, 0) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(lc(0, 0, 1) == doctest::Approx(0.5).epsilon(1e-5));
  CHECK(lc(1, 1, 1) == doctest::Approx(-1.0).epsilon(1e-5));
  CHECK(std::abs(lc(0, 1, 1)) < 1e-5);

  // Bernoulli: g = s(1 - s), Gamma^(0) = T / (2 g) with T = g (1 - 2 s).
  const DualStructure bern = loglinear_dual_structure(SubsetIndex::boltzmann(1), 0.0);
  for (double t : {-1.5, 0.3, 2.0}) {
    const double s = sigmoid(t);
    const ChristoffelTensor fd = levi_civita_from_metric(bern.metric, Vector{t});
    CHECK(fd(0, 0, 0) == doctest::Approx(0.5 * (1 - 2 * s)).epsilon(1e-5));
  }
}

TEST_CASE("duality_residual") {
  // d_sigma g_mumu at sigma = 1 is -4 and the first-kind sum matches it for any alpha.
  for (double alpha : {-1.0, -0.3, 0.0, 0.7, 1.0}) {
    const DualStructure ds = gaussian_dual_structure(alpha);
    const Vector xi{0.0, 1.0};
    const ChristoffelTensor g1 = lower_index(ds.gamma(xi), ds.metric(xi));
    const ChristoffelTensor g2 = lower_index(ds.gamma_dual(xi), ds.metric(xi));
    CHECK(g1(1, 0, 0) + g2(1, 0, 0) == doctest::Approx(-4.0).epsilon(1e-14));
    CHECK(duality_residual(ds, xi) < 1e-6);
  }
  const DualStructure ll = loglinear_dual_structure(SubsetIndex::boltzmann(3), 1.0);
  std::mt19937_64 rng(31);
  for (int trial = 0; trial < 5; ++trial) {
    Vector theta(6);
    for (double& v : theta) v = std::uniform_real_distribution<double>(-1, 1)(rng);
    CHECK(duality_residual(ll, theta) < 1e-6);
  }
}

TEST_CASE("raise and lower are inverse") {
  std::mt19937_64 rng(37);
  ChristoffelTensor t(3);
  for (auto& v : t.data()) v = std::normal_distribution<double>()(rng);
  const Matrix g{{2, 0.3, 0.1}, {0.3, 1.5, -0.2}, {0.1, -0.2, 1.0}};
  const ChristoffelTensor back = lower_index(raise_index(t, g), g);
  for (std::size_t i = 0; i < t.data().size(); ++i) {
    CHECK(back.data()[i] == doctest::Approx(t.data()[i]).epsilon(1e-12));
  }
}

TEST_CASE("G H*^T is symmetric on the Gaussian model for every alpha") {
  const Objective obj = make_objective(AlphaDivergenceObjective{});
  for (double alpha : {-1.0, -0.4, 0.0, 0.6, 1.0}) {
    const DualStructure ds = gaussian_dual_structure(alpha);
    const Vector xi{1.2, 1.6};
    const Matrix gh =
        ds.metric(xi) * dual_hessian_matrix(ds, make_gradient_field(ds, obj), xi).transpose();
    CHECK(std::abs(gh(0, 1) - gh(1, 0)) <= 1e-6 * gh.max_abs());
  }
}
