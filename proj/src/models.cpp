#include "dualnewton/models.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <memory>
#include <mutex>
#include <numbers>
#include <random>
#include <sstream>

#include <boost/math/special_functions/beta.hpp>

namespace dualnewton {

// ---------------------------------------------------------------------------
// SubsetIndex

SubsetIndex::SubsetIndex(std::size_t n_vars, std::vector<std::uint32_t> masks)
    : n_vars_(n_vars), masks_(std::move(masks)) {
  if (n_vars == 0 || n_vars > 20) {
    throw NumericError(ErrorKind::DimensionMismatch, "subset index needs 1 <= n <= 20");
  }
  const std::uint32_t all = (std::uint32_t{1} << n_vars) - 1;
  std::vector<std::uint32_t> sorted = masks_;
  std::sort(sorted.begin(), sorted.end());
  if (std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end()) {
    throw NumericError(ErrorKind::DimensionMismatch, "duplicate subset");
  }
  for (std::uint32_t m : masks_) {
    if (m == 0 || (m & ~all) != 0) {
      throw NumericError(ErrorKind::DimensionMismatch, "subset empty or out of range");
    }
  }
}

SubsetIndex SubsetIndex::boltzmann(std::size_t n_vars) {
  std::vector<std::uint32_t> masks;
  for (std::size_t i = 0; i < n_vars; ++i) masks.push_back(std::uint32_t{1} << i);
  for (std::size_t i = 0; i < n_vars; ++i)
    for (std::size_t j = i + 1; j < n_vars; ++j)
      masks.push_back((std::uint32_t{1} << i) | (std::uint32_t{1} << j));
  return SubsetIndex(n_vars, std::move(masks));
}

SubsetIndex SubsetIndex::full(std::size_t n_vars) {
  std::vector<std::uint32_t> masks;
  for (std::size_t r = 1; r <= n_vars; ++r) {
    // Lexicographic r-combinations of {0..n-1}.
    std::vector<std::size_t> comb(r);
    for (std::size_t i = 0; i < r; ++i) comb[i] = i;
    while (true) {
      std::uint32_t m = 0;
      for (std::size_t v : comb) m |= std::uint32_t{1} << v;
      masks.push_back(m);
      std::size_t i = r;
      while (i > 0 && comb[i - 1] == n_vars - r + i - 1) --i;
      if (i == 0) break;
      ++comb[i - 1];
      for (std::size_t j = i; j < r; ++j) comb[j] = comb[j - 1] + 1;
    }
  }
  return SubsetIndex(n_vars, std::move(masks));
}

std::size_t SubsetIndex::order(std::size_t a) const {
  return static_cast<std::size_t>(std::popcount(masks_[a]));
}

std::string SubsetIndex::key(std::size_t a) const {
  std::string out;
  for (std::size_t v = 0; v < n_vars_; ++v) {
    if (masks_[a] & (std::uint32_t{1} << v)) {
      if (!out.empty()) out += ',';
      out += std::to_string(v + 1);
    }
  }
  return out;
}

std::uint32_t SubsetIndex::parse_key(const std::string& key, std::size_t n_vars) {
  std::uint32_t mask = 0;
  std::stringstream ss(key);
  std::string item;
  while (std::getline(ss, item, ',')) {
    std::size_t pos = 0;
    int v = 0;
    try {
      v = std::stoi(item, &pos);
    } catch (const std::exception&) {
      pos = 0;
    }
    if (pos == 0 || pos != item.size() || v < 1 || static_cast<std::size_t>(v) > n_vars) {
      throw NumericError(ErrorKind::DimensionMismatch, "bad subset key '" + key + "'");
    }
    mask |= std::uint32_t{1} << (v - 1);
  }
  if (mask == 0) throw NumericError(ErrorKind::DimensionMismatch, "empty subset key");
  return mask;
}

std::size_t SubsetIndex::find(std::uint32_t mask) const {
  return static_cast<std::size_t>(std::find(masks_.begin(), masks_.end(), mask) - masks_.begin());
}

// ---------------------------------------------------------------------------
// Log-linear geometry

namespace {

kernels::LogLinearStats stats_of(const LogLinearModel& model, kernels::MomentOrder order) {
  if (model.theta.size() != model.index.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "theta vs subset index");
  }
  return kernels::loglinear_stats(model.index.n_vars(), model.index.masks(), model.theta,
                                  model.index.masks(), order);
}

}  // namespace

Vector loglinear_moments(const LogLinearModel& model, const SubsetIndex& query) {
  if (model.theta.size() != model.index.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "theta vs subset index");
  }
  if (query.n_vars() != model.index.n_vars()) {
    throw NumericError(ErrorKind::DimensionMismatch, "query index over different variables");
  }
  return kernels::loglinear_stats(model.index.n_vars(), model.index.masks(), model.theta,
                                  query.masks(), kernels::MomentOrder::Mean)
      .mean;
}

double loglinear_log_partition(const LogLinearModel& model) {
  return stats_of(model, kernels::MomentOrder::Mean).log_partition;
}

Matrix loglinear_fisher(const LogLinearModel& model) {
  return stats_of(model, kernels::MomentOrder::Covariance).covariance;
}

ChristoffelTensor loglinear_third_moment(const LogLinearModel& model) {
  return stats_of(model, kernels::MomentOrder::ThirdCentral).third;
}

ChristoffelTensor loglinear_christoffel(const LogLinearModel& model, double alpha) {
  const double coeff = 0.5 * (1.0 - alpha);
  if (coeff == 0.0) return ChristoffelTensor(model.index.size());
  kernels::LogLinearStats stats = stats_of(model, kernels::MomentOrder::ThirdCentral);
  stats.third *= coeff;
  return raise_index(stats.third, stats.covariance);
}

Vector loglinear_eta(const LogLinearModel& model) {
  return stats_of(model, kernels::MomentOrder::Mean).mean;
}

Vector loglinear_theta_from_eta(const SubsetIndex& index, std::span<const double> eta,
                                std::span<const double> theta_start) {
  const std::size_t m = index.size();
  if (eta.size() != m || (!theta_start.empty() && theta_start.size() != m)) {
    throw NumericError(ErrorKind::DimensionMismatch, "loglinear_theta_from_eta");
  }
  for (double e : eta) {
    if (!(e > 0.0 && e < 1.0)) {
      throw NumericError(ErrorKind::MomentInfeasible, "moment outside (0, 1)");
    }
  }
  LogLinearModel model{index, theta_start.empty() ? Vector(m, 0.0)
                                                  : Vector(theta_start.begin(), theta_start.end())};
  // h(theta) = psi(theta) - <theta, eta> is strictly convex with gradient
  // eta(theta) - eta and Hessian G(theta).
  const auto objective = [&](const kernels::LogLinearStats& s, std::span<const double> theta) {
    return s.log_partition - dot(theta, eta);
  };
  constexpr int kMaxIters = 200;
  for (int iter = 0; iter < kMaxIters; ++iter) {
    const kernels::LogLinearStats s = stats_of(model, kernels::MomentOrder::Covariance);
    Vector residual(m);
    for (std::size_t a = 0; a < m; ++a) residual[a] = s.mean[a] - eta[a];
    if (norm_inf(residual) < 1e-12) return model.theta;
    Vector step;
    try {
      step = scaled(-1.0, solve_spd(s.covariance, residual));
    } catch (const NumericError&) {
      break;
    }
    const double h0 = objective(s, model.theta);
    const double slope = dot(residual, step);
    const double r0 = norm_inf(residual);
    double t = 1.0;
    for (int k = 0; k < 60; ++k, t *= 0.5) {
      LogLinearModel trial{index, axpy(t, step, model.theta)};
      const auto ts = stats_of(trial, kernels::MomentOrder::Mean);
      if (objective(ts, trial.theta) <= h0 + 1e-4 * t * slope || t < 1e-12) break;
      // Close to the solution the decrease in h drops below its rounding, so
      // there a sufficient drop in the moment residual accepts the step.
      if (-slope < 1e-10 * (1.0 + std::abs(h0))) {
        double r = 0.0;
        for (std::size_t a = 0; a < m; ++a) r = std::max(r, std::abs(ts.mean[a] - eta[a]));
        if (r <= (1.0 - 1e-4 * t) * r0) break;
      }
    }
    model.theta = axpy(t, step, model.theta);
    if (!all_finite(model.theta)) break;
  }
  throw NumericError(ErrorKind::MomentInfeasible, "inverse Legendre map did not converge");
}

DualStructure loglinear_dual_structure(const SubsetIndex& index, double alpha) {
  DualStructure ds;
  ds.dim = index.size();
  ds.alpha = alpha;
  ds.metric = [index](std::span<const double> theta) {
    return loglinear_fisher(LogLinearModel{index, Vector(theta.begin(), theta.end())});
  };
  ds.gamma = [index, alpha](std::span<const double> theta) {
    return loglinear_christoffel(LogLinearModel{index, Vector(theta.begin(), theta.end())}, alpha);
  };
  ds.gamma_dual = [index, alpha](std::span<const double> theta) {
    return loglinear_christoffel(LogLinearModel{index, Vector(theta.begin(), theta.end())},
                                 -alpha);
  };
  return ds;
}

// ---------------------------------------------------------------------------
// Gaussian

namespace {

void check_sigma(double sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw NumericError(ErrorKind::DomainViolation, "sigma must be positive");
  }
}

}  // namespace

Matrix gaussian_fisher(const GaussianIsoModel& model) {
  check_sigma(model.sigma);
  const double s2 = model.sigma * model.sigma;
  return Matrix{{2.0 / s2, 0.0}, {0.0, 4.0 / s2}};
}

ChristoffelTensor gaussian_christoffel(const GaussianIsoModel& model, double alpha) {
  check_sigma(model.sigma);
  const double s = model.sigma;
  ChristoffelTensor g(2);
  g(0, 1, 0) = g(1, 0, 0) = -(1.0 + alpha) / s;
  g(0, 0, 1) = (1.0 - alpha) / (2.0 * s);
  g(1, 1, 1) = -(1.0 + 2.0 * alpha) / s;
  return g;
}

DualStructure gaussian_dual_structure(double alpha) {
  DualStructure ds;
  ds.dim = 2;
  ds.alpha = alpha;
  ds.metric = [](std::span<const double> xi) {
    return gaussian_fisher(GaussianIsoModel{xi[0], xi[1]});
  };
  ds.gamma = [alpha](std::span<const double> xi) {
    return gaussian_christoffel(GaussianIsoModel{xi[0], xi[1]}, alpha);
  };
  ds.gamma_dual = [alpha](std::span<const double> xi) {
    return gaussian_christoffel(GaussianIsoModel{xi[0], xi[1]}, -alpha);
  };
  ds.in_domain = [](std::span<const double> xi) { return xi[1] > 0.0; };
  return ds;
}

// ---------------------------------------------------------------------------
// Beta mixtures

QuadratureRule QuadratureRule::gauss_legendre(std::size_t n) {
  if (n == 0) throw NumericError(ErrorKind::DimensionMismatch, "empty quadrature rule");
  QuadratureRule rule;
  rule.nodes.resize(n);
  rule.complements.resize(n);
  rule.weights.resize(n);
  const std::size_t half = (n + 1) / 2;
  for (std::size_t i = 0; i < half; ++i) {
    double z = std::cos(std::numbers::pi * (static_cast<double>(i) + 0.75) /
                        (static_cast<double>(n) + 0.5));
    double dp = 0.0;
    for (int it = 0; it < 100; ++it) {
      double p1 = 1.0, p2 = 0.0;
      for (std::size_t j = 1; j <= n; ++j) {
        const double p3 = p2;
        p2 = p1;
        p1 = ((2.0 * j - 1.0) * z * p2 - (j - 1.0) * p3) / static_cast<double>(j);
      }
      dp = static_cast<double>(n) * (z * p1 - p2) / (z * z - 1.0);
      const double dz = p1 / dp;
      z -= dz;
      if (std::abs(dz) < 1e-16) break;
    }
    // Weight on [-1, 1] is 2 / ((1 - z^2) P_n'(z)^2); halve for (0, 1).
    const double w = 1.0 / ((1.0 - z * z) * dp * dp);
    rule.nodes[i] = 0.5 * (1.0 - z);
    rule.nodes[n - 1 - i] = 0.5 * (1.0 + z);
    rule.weights[i] = rule.weights[n - 1 - i] = w;
  }
  for (std::size_t i = 0; i < n; ++i) rule.complements[i] = rule.nodes[n - 1 - i];
  return rule;
}

QuadratureRule QuadratureRule::graded_gauss_legendre(std::size_t n, int grading) {
  if (grading < 1) throw NumericError(ErrorKind::DimensionMismatch, "grading must be >= 1");
  QuadratureRule rule = gauss_legendre(n);
  rule.complements.resize(n);
  const double p = grading;
  for (std::size_t i = 0; i < n; ++i) {
    // x = I_u(p, p) is symmetric about 1/2. Work from the nearer endpoint so
    // nodes next to 1 keep their distance from it and pairs mirror exactly.
    const bool lower = 2 * i + 1 < n;
    const double u = lower ? rule.nodes[i] : rule.complements[i];
    const double lo = 2 * i + 1 == n ? 0.5 : boost::math::ibeta(p, p, u);
    rule.nodes[i] = lower ? lo : 1.0 - lo;
    rule.complements[i] = lower ? 1.0 - lo : lo;
    rule.weights[i] *= boost::math::ibeta_derivative(p, p, u);
  }
  return rule;
}

void BetaMixtureModel::validate() const {
  if (weights.empty() || shapes.size() != 2 * weights.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "Beta mixture layout");
  }
  CompensatedSum total;
  for (double w : weights) {
    if (!(w > 0.0)) throw NumericError(ErrorKind::DomainViolation, "weight must be positive");
    total += w;
  }
  if (std::abs(total.value() - 1.0) > 1e-12) {
    throw NumericError(ErrorKind::DomainViolation, "weights must sum to one");
  }
  for (double s : shapes) {
    if (!(s > 0.0)) throw NumericError(ErrorKind::DomainViolation, "shape must be positive");
  }
}

namespace {

kernels::BetaMixtureMoments moments_at(const BetaMixtureModel& model,
                                       std::span<const double> shapes,
                                       kernels::MomentOrder order) {
  if (shapes.size() != model.dim()) {
    throw NumericError(ErrorKind::DimensionMismatch, "Beta mixture coordinates");
  }
  return kernels::beta_mixture_moments({model.weights, shapes}, model.rule.nodes,
                                       model.rule.weights, order, kernels::Exec::Parallel,
                                       model.rule.complements);
}

ChristoffelTensor connection_from(const kernels::BetaMixtureMoments& m, double alpha) {
  ChristoffelTensor first = m.third;
  first *= 0.5 * (1.0 - alpha);
  first += m.second;
  return raise_index(first, m.metric);
}

// Single-entry memo of the last full moment pass; the metric, gamma and
// gamma_dual callables are usually evaluated at the same point in turn.
class MomentCache {
 public:
  explicit MomentCache(BetaMixtureModel model) : model_(std::move(model)) {}

  kernels::BetaMixtureMoments get(std::span<const double> shapes) {
    {
      std::lock_guard lock(mutex_);
      if (std::equal(shapes.begin(), shapes.end(), key_.begin(), key_.end())) return value_;
    }
    kernels::BetaMixtureMoments m = moments_at(model_, shapes, kernels::MomentOrder::ThirdCentral);
    std::lock_guard lock(mutex_);
    key_.assign(shapes.begin(), shapes.end());
    value_ = m;
    return m;
  }

  const BetaMixtureModel& model() const { return model_; }

 private:
  BetaMixtureModel model_;
  std::mutex mutex_;
  Vector key_;
  kernels::BetaMixtureMoments value_;
};

}  // namespace

BetaGeometry beta_mixture_geometry(const BetaMixtureModel& model, double alpha,
                                   std::span<const double> shapes) {
  const kernels::BetaMixtureMoments m =
      moments_at(model, shapes, kernels::MomentOrder::ThirdCentral);
  return BetaGeometry{m.metric, connection_from(m, alpha)};
}

Matrix beta_mixture_fisher(const BetaMixtureModel& model, std::span<const double> shapes) {
  return moments_at(model, shapes, kernels::MomentOrder::Covariance).metric;
}

DualStructure beta_mixture_dual_structure(const BetaMixtureModel& model, double alpha) {
  model.validate();
  auto cache = std::make_shared<MomentCache>(model);
  DualStructure ds;
  ds.dim = model.dim();
  ds.alpha = alpha;
  ds.metric = [cache](std::span<const double> xi) {
    return beta_mixture_fisher(cache->model(), xi);
  };
  ds.gamma = [cache, alpha](std::span<const double> xi) {
    return connection_from(cache->get(xi), alpha);
  };
  ds.gamma_dual = [cache, alpha](std::span<const double> xi) {
    return connection_from(cache->get(xi), -alpha);
  };
  ds.in_domain = [](std::span<const double> xi) {
    return std::all_of(xi.begin(), xi.end(), [](double v) { return v > 0.0; });
  };
  return ds;
}

Vector beta_mixture_sample(const BetaMixtureModel& model, std::size_t count,
                           std::uint64_t seed) {
  model.validate();
  std::mt19937_64 rng(seed);
  std::discrete_distribution<std::size_t> pick(model.weights.begin(), model.weights.end());
  std::vector<std::gamma_distribution<double>> gamma_a, gamma_b;
  for (std::size_t k = 0; k < model.components(); ++k) {
    gamma_a.emplace_back(model.shapes[2 * k], 1.0);
    gamma_b.emplace_back(model.shapes[2 * k + 1], 1.0);
  }
  const auto draw = [&](std::size_t k) {
    while (true) {
      const double x = gamma_a[k](rng);
      const double y = gamma_b[k](rng);
      const double v = x / (x + y);
      if (v > 0.0 && v < 1.0) return v;
    }
  };
  Vector points(2 * count);
  for (std::size_t i = 0; i < count; ++i) {
    const std::size_t k = pick(rng);
    points[2 * i] = draw(k);
    points[2 * i + 1] = draw(k);
  }
  return points;
}

}  // namespace dualnewton
