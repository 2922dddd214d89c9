#include "dualnewton/optimizers.hpp"

#include <chrono>
#include <cmath>
#include <limits>
#include <optional>

#include "dualnewton/models.hpp"

namespace dualnewton {

const char* to_string(RunStatus status) {
  switch (status) {
    case RunStatus::Converged: return "Converged";
    case RunStatus::MaxIters: return "MaxIters";
    case RunStatus::SingularHessian: return "SingularHessian";
    case RunStatus::DomainFailure: return "DomainFailure";
  }
  return "Unknown";
}

bool OptimizerTrace::all_spd() const {
  for (const auto& r : records)
    if (!r.spd) return false;
  return true;
}

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct PointEval {
  double f = 0.0;
  Vector grad;
  Vector a;
  double l2 = 0.0;
  double gnorm = 0.0;
};

PointEval evaluate_point(const DualStructure& ds, const Objective& obj,
                         std::span<const double> xi) {
  PointEval pe;
  Evaluation e = obj.evaluate(xi);
  if (!std::isfinite(e.value) || !all_finite(e.grad)) {
    throw NumericError(ErrorKind::NonFiniteValue, "objective evaluation");
  }
  pe.f = e.value;
  pe.grad = std::move(e.grad);
  pe.a = riemannian_gradient(ds, pe.grad, xi);
  pe.l2 = norm2(pe.a);
  pe.gnorm = std::sqrt(std::max(0.0, dot(pe.a, pe.grad)));  // a^T G a = a^T grad f
  return pe;
}

bool admissible(const DualStructure& ds, const Objective& obj, std::span<const double> xi) {
  return ds.contains(xi) && obj.contains(xi);
}

double distance(std::span<const double> x, std::span<const double> y) {
  CompensatedSum s;
  for (std::size_t i = 0; i < x.size(); ++i) s += (x[i] - y[i]) * (x[i] - y[i]);
  return std::sqrt(s.value());
}

/// Shared iteration driver. `step` maps the current point and its evaluation
/// to the next point and the step's SPD flag.
using StepFn = std::function<std::pair<Vector, bool>(const Vector&, const PointEval&)>;

OptimizerTrace drive(const char* method, const DualStructure& ds, const Objective& obj,
                     std::span<const double> xi0, const StopRule& stop, const StepFn& step) {
  using Clock = std::chrono::steady_clock;
  const auto start = Clock::now();
  OptimizerTrace trace;
  trace.method = method;
  Vector xi(xi0.begin(), xi0.end());
  trace.iterates.push_back(xi);
  if (xi.size() != ds.dim || xi.size() != obj.dim) {
    throw NumericError(ErrorKind::DimensionMismatch, "starting point");
  }
  if (!admissible(ds, obj, xi)) {
    trace.status = RunStatus::DomainFailure;
    trace.message = "starting point outside the domain";
    return trace;
  }
  try {
    PointEval pe = evaluate_point(ds, obj, xi);
    trace.f0 = pe.f;
    trace.grad_l2_0 = pe.l2;
    trace.grad_gnorm_0 = pe.gnorm;
    for (int k = 1;; ++k) {
      if (pe.l2 < stop.grad_tol) {
        trace.status = RunStatus::Converged;
        break;
      }
      if (k > stop.max_iters) {
        trace.status = RunStatus::MaxIters;
        break;
      }
      auto [next, spd] = step(xi, pe);
      pe = evaluate_point(ds, obj, next);
      IterationRecord rec;
      rec.iter = k;
      rec.f = pe.f;
      rec.grad_l2 = pe.l2;
      rec.grad_gnorm = pe.gnorm;
      rec.step_norm = distance(next, xi);
      rec.spd = spd;
      rec.time_s = std::chrono::duration<double>(Clock::now() - start).count();
      trace.records.push_back(rec);
      xi = std::move(next);
      trace.iterates.push_back(xi);
    }
  } catch (const NumericError& e) {
    trace.status = e.kind() == ErrorKind::SingularMatrix ? RunStatus::SingularHessian
                                                          : RunStatus::DomainFailure;
    trace.message = e.what();
  }
  return trace;
}

/// Caches the last objective evaluation along a line-search curve so phi and
/// phi' at the same trial share one call.
class CurveProbe {
 public:
  using Curve = std::function<std::optional<Vector>(double)>;

  CurveProbe(const Objective& obj, Curve curve) : obj_(obj), curve_(std::move(curve)) {}

  /// Point and evaluation at s, or nullopt outside the domain.
  const std::optional<std::pair<Vector, Evaluation>>& at(double s) {
    if (!cached_ || s != s_) {
      s_ = s;
      cached_ = true;
      value_.reset();
      std::optional<Vector> p = curve_(s);
      if (p && obj_.contains(*p)) {
        try {
          Evaluation e = obj_.evaluate(*p);
          if (std::isfinite(e.value) && all_finite(e.grad)) value_.emplace(std::move(*p), e);
        } catch (const NumericError&) {
        }
      }
    }
    return value_;
  }

  double phi(double s) {
    const auto& v = at(s);
    return v ? v->second.value : kInf;
  }

 private:
  const Objective& obj_;
  Curve curve_;
  bool cached_ = false;
  double s_ = 0.0;
  std::optional<std::pair<Vector, Evaluation>> value_;
};

}  // namespace

// ---------------------------------------------------------------------------

double wolfe_line_search(const std::function<double(double)>& phi,
                         const std::function<double(double)>& dphi, const WolfeOptions& opt) {
  const double phi0 = phi(0.0);
  const double d0 = dphi(0.0);
  if (!(d0 < 0.0) || !std::isfinite(phi0)) {
    throw NumericError(ErrorKind::LineSearchFailure, "not a descent direction");
  }
  int budget = opt.max_steps;
  // Values within rounding noise of phi(0) cannot be ordered reliably.
  const double noise =
      opt.relative_value_noise * std::numeric_limits<double>::epsilon() * (1.0 + std::abs(phi0));
  auto armijo_fails = [&](double s, double v) {
    return !std::isfinite(v) || v > phi0 + opt.c1 * s * d0 + noise;
  };
  auto curvature_ok = [&](double d) { return std::abs(d) <= -opt.c2 * d0; };

  auto zoom = [&](double lo, double phi_lo, double hi) -> double {
    while (budget-- > 0) {
      const double s = 0.5 * (lo + hi);
      const double v = phi(s);
      if (armijo_fails(s, v) || v >= phi_lo + noise) {
        hi = s;
        continue;
      }
      const double d = dphi(s);
      if (curvature_ok(d)) return s;
      if (d * (hi - lo) >= 0.0) hi = lo;
      lo = s;
      phi_lo = v;
    }
    throw NumericError(ErrorKind::LineSearchFailure, "zoom budget exhausted");
  };

  double s_prev = 0.0;
  double phi_prev = phi0;
  double s = opt.initial_step;
  for (int i = 0; budget-- > 0; ++i) {
    const double v = phi(s);
    if (armijo_fails(s, v) || (i > 0 && v >= phi_prev + noise)) return zoom(s_prev, phi_prev, s);
    const double d = dphi(s);
    if (curvature_ok(d)) return s;
    if (d >= 0.0) return zoom(s, v, s_prev);
    s_prev = s;
    phi_prev = v;
    s *= 2.0;
  }
  throw NumericError(ErrorKind::LineSearchFailure, "bracketing budget exhausted");
}

// ---------------------------------------------------------------------------

OptimizerTrace dual_newton_run(const DualStructure& ds, const Objective& obj,
                               std::span<const double> xi0, const StopRule& stop,
                               const NewtonOptions& opt) {
  GradientField field = make_gradient_field(ds, obj);
  auto step = [&](const Vector& xi, const PointEval& pe) -> std::pair<Vector, bool> {
    const Matrix h = dual_hessian_matrix(ds, field, xi, opt.jacobian);
    const NewtonStep ns = newton_direction(ds, h, pe.grad, xi);
    if (opt.damped && ns.spd) {
      // Retraction curve c(s) = xi + s beta - s^2/2 Gamma(beta, beta).
      const ChristoffelTensor gamma = ds.gamma(xi);
      const std::size_t n = xi.size();
      Vector quad(n, 0.0);
      for (std::size_t i = 0; i < n; ++i) {
        CompensatedSum q;
        for (std::size_t j = 0; j < n; ++j)
          for (std::size_t k = 0; k < n; ++k) q += gamma(j, k, i) * ns.beta[j] * ns.beta[k];
        quad[i] = q.value();
      }
      CurveProbe probe(obj, [&](double s) -> std::optional<Vector> {
        Vector p(n);
        for (std::size_t i = 0; i < n; ++i) p[i] = xi[i] + s * ns.beta[i] - 0.5 * s * s * quad[i];
        if (!ds.contains(p)) return std::nullopt;
        return p;
      });
      auto dphi = [&](double s) {
        const auto& v = probe.at(s);
        if (!v) return kInf;
        Vector tangent(n);
        for (std::size_t i = 0; i < n; ++i) tangent[i] = ns.beta[i] - s * quad[i];
        return dot(v->second.grad, tangent);
      };
      const double s = wolfe_line_search([&](double t) { return probe.phi(t); }, dphi, opt.wolfe);
      return {probe.at(s)->first, true};
    }
    RetractResult r = retract_with_halving(ds, xi, ns.beta, opt.max_halvings);
    if (!obj.contains(r.point)) {
      throw NumericError(ErrorKind::DomainViolation, "objective undefined after retraction");
    }
    return {std::move(r.point), ns.spd};
  };
  return drive("dual_newton", ds, obj, xi0, stop, step);
}

OptimizerTrace natural_gradient_run(const DualStructure& ds, const Objective& obj,
                                    std::span<const double> xi0, const StopRule& stop,
                                    const WolfeOptions& wolfe) {
  auto step = [&](const Vector& xi, const PointEval& pe) -> std::pair<Vector, bool> {
    const Vector dir = scaled(-1.0, pe.a);
    CurveProbe probe(obj, [&](double s) -> std::optional<Vector> {
      Vector p = axpy(s, dir, xi);
      if (!ds.contains(p)) return std::nullopt;
      return p;
    });
    auto dphi = [&](double s) {
      const auto& v = probe.at(s);
      return v ? dot(v->second.grad, dir) : kInf;
    };
    const double s = wolfe_line_search([&](double t) { return probe.phi(t); }, dphi, wolfe);
    return {probe.at(s)->first, true};
  };
  return drive("natural_gradient", ds, obj, xi0, stop, step);
}

Vector mirror_step(const KLProjectionObjective& obj, std::span<const double> theta, double s) {
  const LogLinearModel model{obj.index, Vector(theta.begin(), theta.end())};
  const Vector eta = loglinear_eta(model);
  const Vector grad = kl_objective_eval(obj, theta).grad;
  return loglinear_theta_from_eta(obj.index, axpy(-s, grad, eta), theta);
}

OptimizerTrace mirror_descent_run(const DualStructure& ds, const KLProjectionObjective& kl,
                                  std::span<const double> theta0, const StopRule& stop,
                                  const WolfeOptions& wolfe) {
  const Objective obj = make_objective(kl);
  auto step = [&](const Vector& theta, const PointEval& pe) -> std::pair<Vector, bool> {
    const Vector eta = loglinear_eta(LogLinearModel{kl.index, theta});
    const Vector& g = pe.grad;
    // theta(s) = grad phi(eta - s g); d theta / ds = -G(theta(s))^{-1} g.
    CurveProbe probe(obj, [&](double s) -> std::optional<Vector> {
      try {
        return loglinear_theta_from_eta(kl.index, axpy(-s, g, eta), theta);
      } catch (const NumericError& e) {
        if (e.kind() == ErrorKind::MomentInfeasible) return std::nullopt;
        throw;
      }
    });
    auto dphi = [&](double s) {
      const auto& v = probe.at(s);
      if (!v) return kInf;
      const Vector dtheta = solve_spd(ds.metric(v->first), g);
      return -dot(v->second.grad, dtheta);
    };
    const double s = wolfe_line_search([&](double t) { return probe.phi(t); }, dphi, wolfe);
    return {probe.at(s)->first, true};
  };
  return drive("mirror_descent", ds, obj, theta0, stop, step);
}

Vector adam_update(AdamState& state, std::span<const double> grad, const AdamOptions& opt) {
  const std::size_t n = grad.size();
  if (state.m.empty()) state.m.assign(n, 0.0);
  if (state.v.empty()) state.v.assign(n, 0.0);
  ++state.t;
  const double c1 = 1.0 - std::pow(opt.beta1, state.t);
  const double c2 = 1.0 - std::pow(opt.beta2, state.t);
  Vector step(n);
  for (std::size_t i = 0; i < n; ++i) {
    state.m[i] = opt.beta1 * state.m[i] + (1.0 - opt.beta1) * grad[i];
    state.v[i] = opt.beta2 * state.v[i] + (1.0 - opt.beta2) * grad[i] * grad[i];
    const double m_hat = state.m[i] / c1;
    const double v_hat = state.v[i] / c2;
    step[i] = -opt.learning_rate * m_hat / (std::sqrt(v_hat) + opt.epsilon);
  }
  return step;
}

OptimizerTrace adam_run(const DualStructure& ds, const Objective& obj,
                        std::span<const double> xi0, const StopRule& stop,
                        const AdamOptions& opt) {
  AdamState state;
  auto step = [&](const Vector& xi, const PointEval& pe) -> std::pair<Vector, bool> {
    Vector delta = adam_update(state, pe.grad, opt);
    for (int h = 0; h <= opt.max_halvings; ++h) {
      Vector p = axpy(1.0, delta, xi);
      if (admissible(ds, obj, p)) return {std::move(p), true};
      delta = scaled(0.5, delta);
    }
    throw NumericError(ErrorKind::DomainViolation, "Adam step left the domain");
  };
  return drive("adam", ds, obj, xi0, stop, step);
}

// ---------------------------------------------------------------------------

double convergence_order(std::span<const double> errors) {
  if (errors.size() < 4) {
    throw NumericError(ErrorKind::InsufficientIterations, "need at least four iterates");
  }
  const double floor = 100.0 * std::numeric_limits<double>::epsilon();
  CompensatedSum sum;
  int used = 0;
  for (std::size_t k = 1; k + 1 < errors.size(); ++k) {
    const double e0 = errors[k - 1], e1 = errors[k], e2 = errors[k + 1];
    if (!(e0 > floor && e1 > floor && e2 > floor) || e0 == e1) continue;
    sum += std::log(e2 / e1) / std::log(e1 / e0);
    ++used;
  }
  if (used == 0) {
    throw NumericError(ErrorKind::InsufficientIterations, "no usable error triple");
  }
  return sum.value() / used;
}

double convergence_order(const OptimizerTrace& trace, std::span<const double> xi_final) {
  if (trace.iterations() < 4) {
    throw NumericError(ErrorKind::InsufficientIterations, "need at least four iterations");
  }
  Vector errors;
  errors.reserve(trace.iterates.size());
  for (const Vector& x : trace.iterates) errors.push_back(distance(x, xi_final));
  return convergence_order(errors);
}

}  // namespace dualnewton
