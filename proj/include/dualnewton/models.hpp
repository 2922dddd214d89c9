#pragma once

// Statistical manifolds with their Fisher metric and alpha-connections:
//   - log-linear models on {0,1}^n in natural (theta) coordinates, by exact
//     enumeration of the 2^n states;
//   - the isotropic bivariate Gaussian N((mu, mu), sigma^2 I) in (mu, sigma);
//   - fixed-weight mixtures of product-Beta densities on (0,1)^2 in shape
//     coordinates, by tensor-product graded Gauss-Legendre quadrature.

#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "dualnewton/geometry.hpp"
#include "dualnewton/kernels.hpp"
#include "dualnewton/linalg.hpp"

namespace dualnewton {

// ---------------------------------------------------------------------------
// Log-linear models

/// Ordered list of nonempty variable subsets A ⊆ {1..n}, stored as bitmasks
/// (variable i ↦ bit i-1).
class SubsetIndex {
 public:
  SubsetIndex() = default;
  /// Throws DimensionMismatch on empty/out-of-range/duplicate subsets.
  SubsetIndex(std::size_t n_vars, std::vector<std::uint32_t> masks);

  /// Singletons 1..n, then pairs (i<j) in lexicographic order.
  static SubsetIndex boltzmann(std::size_t n_vars);
  /// Every nonempty subset, by size and then lexicographically.
  static SubsetIndex full(std::size_t n_vars);

  std::size_t n_vars() const { return n_vars_; }
  std::size_t size() const { return masks_.size(); }
  std::span<const std::uint32_t> masks() const { return masks_; }
  std::uint32_t mask(std::size_t a) const { return masks_[a]; }
  std::size_t order(std::size_t a) const;

  /// "1,3,4"-style key of subset `a`.
  std::string key(std::size_t a) const;
  static std::uint32_t parse_key(const std::string& key, std::size_t n_vars);

  /// Position of `mask`, or size() when absent.
  std::size_t find(std::uint32_t mask) const;

  friend bool operator==(const SubsetIndex&, const SubsetIndex&) = default;

 private:
  std::size_t n_vars_ = 0;
  std::vector<std::uint32_t> masks_;
};

struct LogLinearModel {
  SubsetIndex index;
  Vector theta;
};

/// eta_A = E[prod_{i in A} x_i] for each queried subset.
Vector loglinear_moments(const LogLinearModel& model, const SubsetIndex& query);

double loglinear_log_partition(const LogLinearModel& model);

/// G_AB = eta_{A∪B} - eta_A eta_B over the model index.
Matrix loglinear_fisher(const LogLinearModel& model);

/// Third central moment tensor of the sufficient statistics, which is both
/// d_C G_AB and the first-kind symbol of the alpha = -1 connection.
ChristoffelTensor loglinear_third_moment(const LogLinearModel& model);

/// Second-kind alpha-connection symbols in theta coordinates:
/// first kind (1 - alpha)/2 * T, raised through G.
ChristoffelTensor loglinear_christoffel(const LogLinearModel& model, double alpha);

/// Forward Legendre map theta -> eta over the model's own index.
Vector loglinear_eta(const LogLinearModel& model);

/// Inverse Legendre map eta -> theta by damped Newton on psi(theta) - <theta, eta>
/// until ||eta(theta) - eta||_inf < 1e-12. Throws MomentInfeasible when this
/// fails within 200 iterations.
Vector loglinear_theta_from_eta(const SubsetIndex& index, std::span<const double> eta,
                                std::span<const double> theta_start = {});

/// Theta-chart dual structure with nabla = alpha and nabla* = -alpha.
DualStructure loglinear_dual_structure(const SubsetIndex& index, double alpha);

// ---------------------------------------------------------------------------
// Isotropic bivariate Gaussian, coordinates (mu, sigma)

struct GaussianIsoModel {
  double mu = 0.0;
  double sigma = 1.0;
};

/// diag(2 / sigma^2, 4 / sigma^2).
Matrix gaussian_fisher(const GaussianIsoModel& model);

/// Gamma^1 = [[0, -(1+a)/s], [-(1+a)/s, 0]],
/// Gamma^2 = [[(1-a)/(2s), 0], [0, -(1+2a)/s]].
ChristoffelTensor gaussian_christoffel(const GaussianIsoModel& model, double alpha);

DualStructure gaussian_dual_structure(double alpha);

// ---------------------------------------------------------------------------
// Beta mixtures

/// 1-D rule on (0,1) whose weights sum to one.
struct QuadratureRule {
  Vector nodes;
  Vector weights;
  Vector complements;  // 1 - nodes, kept separately for nodes close to 1

  /// n-point Gauss-Legendre rule mapped from [-1, 1] to (0, 1).
  static QuadratureRule gauss_legendre(std::size_t n);
  /// Gauss-Legendre in u after x = I_u(p, p), the regularized incomplete beta
  /// function with p = `grading`; p = 3 is 10u^3 - 15u^4 + 6u^5. The
  /// substitution flattens log and power singularities of Beta scores at 0
  /// and 1.
  static QuadratureRule graded_gauss_legendre(std::size_t n, int grading = kDefaultGrading);

  static constexpr int kDefaultGrading = 6;
};

struct BetaMixtureModel {
  Vector weights;  // fixed, on the simplex
  Vector shapes;   // (a_1, b_1, ..., a_K, b_K)
  QuadratureRule rule = QuadratureRule::graded_gauss_legendre(64);

  std::size_t components() const { return weights.size(); }
  std::size_t dim() const { return 2 * weights.size(); }
  /// Throws DomainViolation unless weights sum to one and all are positive.
  void validate() const;
};

struct BetaGeometry {
  Matrix metric;
  ChristoffelTensor gamma;  // second kind
};

/// Fisher metric and alpha-connection of the mixture density at `shapes`.
BetaGeometry beta_mixture_geometry(const BetaMixtureModel& model, double alpha,
                                   std::span<const double> shapes);

Matrix beta_mixture_fisher(const BetaMixtureModel& model, std::span<const double> shapes);

/// Shapes chart; every shape must stay positive.
DualStructure beta_mixture_dual_structure(const BetaMixtureModel& model, double alpha);

/// `count` points (x1, x2) flattened, component by weight, each coordinate an
/// independent Beta draw X / (X + Y) from two gamma variates.
Vector beta_mixture_sample(const BetaMixtureModel& model, std::size_t count,
                           std::uint64_t seed);

}  // namespace dualnewton
