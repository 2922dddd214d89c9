#pragma once

// Iterative methods sharing one trace format and one stopping rule: the
// Euclidean l2 norm of a = G^{-1} grad f below grad_tol.

#include <cstddef>
#include <functional>
#include <span>
#include <string>
#include <vector>

#include "dualnewton/geometry.hpp"
#include "dualnewton/linalg.hpp"
#include "dualnewton/objectives.hpp"

namespace dualnewton {

struct StopRule {
  double grad_tol = 1e-6;
  int max_iters = 10000;
};

enum class RunStatus { Converged, MaxIters, SingularHessian, DomainFailure };

const char* to_string(RunStatus status);

/// State after iteration `iter` (1-based). `spd` describes the step that
/// produced this point; methods without a Hessian report true.
struct IterationRecord {
  int iter = 0;
  double f = 0.0;
  double grad_l2 = 0.0;
  double grad_gnorm = 0.0;
  double step_norm = 0.0;
  bool spd = true;
  double time_s = 0.0;
};

struct OptimizerTrace {
  std::string method;
  RunStatus status = RunStatus::MaxIters;
  std::string message;  // detail for non-converged runs

  // State at the starting point.
  double f0 = 0.0;
  double grad_l2_0 = 0.0;
  double grad_gnorm_0 = 0.0;

  std::vector<IterationRecord> records;
  /// iterates[0] is the start, iterates[k] the point after iteration k.
  std::vector<Vector> iterates;

  int iterations() const { return static_cast<int>(records.size()); }
  const Vector& final_point() const { return iterates.back(); }
  double final_grad_l2() const { return records.empty() ? grad_l2_0 : records.back().grad_l2; }
  double total_time() const { return records.empty() ? 0.0 : records.back().time_s; }
  /// Every recorded step was certified SPD.
  bool all_spd() const;
};

// ---------------------------------------------------------------------------
// Line search

struct WolfeOptions {
  double c1 = 1e-4;
  double c2 = 0.9;
  double initial_step = 1.0;
  int max_steps = 60;  // trial evaluations across bracketing and zoom
  /// Value comparisons allow this many ulps of |phi(0)|, so near a minimum
  /// the curvature test decides instead of rounding noise.
  double relative_value_noise = 1000.0;
};

/// Step satisfying the strong Wolfe conditions
///   phi(s) <= phi(0) + c1 s phi'(0),  |phi'(s)| <= c2 |phi'(0)|.
/// Bracketing doubles the trial; zoom bisects. Non-finite phi values count as
/// sufficient-decrease failures, so domain exits shrink the step.
/// Throws LineSearchFailure when phi'(0) >= 0 or the budget runs out.
double wolfe_line_search(const std::function<double(double)>& phi,
                         const std::function<double(double)>& dphi,
                         const WolfeOptions& opt = {});

// ---------------------------------------------------------------------------
// Methods

struct NewtonOptions {
  JacobianMode jacobian = JacobianMode::Analytic;
  /// Wolfe search along the retraction curve whenever the step is certified SPD.
  bool damped = false;
  int max_halvings = 30;
  WolfeOptions wolfe{};
};

OptimizerTrace dual_newton_run(const DualStructure& ds, const Objective& obj,
                               std::span<const double> xi0, const StopRule& stop,
                               const NewtonOptions& opt = {});

/// Direction -a, step from wolfe_line_search, update xi + s * beta.
OptimizerTrace natural_gradient_run(const DualStructure& ds, const Objective& obj,
                                    std::span<const double> xi0, const StopRule& stop,
                                    const WolfeOptions& wolfe = {});

/// One mirror step eta(theta) - s * grad_theta f mapped back through the
/// inverse Legendre map. Throws MomentInfeasible when the moments leave the
/// polytope.
Vector mirror_step(const KLProjectionObjective& obj, std::span<const double> theta, double s);

/// Mirror descent on a KL projection, s from Wolfe on s -> f(mirror_step(s)).
OptimizerTrace mirror_descent_run(const DualStructure& ds, const KLProjectionObjective& obj,
                                  std::span<const double> theta0, const StopRule& stop,
                                  const WolfeOptions& wolfe = {});

struct AdamOptions {
  double learning_rate = 0.01;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  int max_halvings = 30;
};

struct AdamState {
  Vector m;
  Vector v;
  int t = 0;
};

/// One bias-corrected Adam update of `state`; returns the step to add.
Vector adam_update(AdamState& state, std::span<const double> grad, const AdamOptions& opt);

/// Adam on the Euclidean coordinate gradient. Steps that leave the domain are
/// halved; the stopping norm is still that of a = G^{-1} grad f.
OptimizerTrace adam_run(const DualStructure& ds, const Objective& obj,
                        std::span<const double> xi0, const StopRule& stop,
                        const AdamOptions& opt = {});

// ---------------------------------------------------------------------------
// Convergence order

/// Mean of log(e_{k+1}/e_k) / log(e_k/e_{k-1}) over consecutive triples whose
/// errors all exceed 100 machine epsilon. Throws InsufficientIterations when
/// fewer than four errors are given or no triple is usable.
double convergence_order(std::span<const double> errors);

/// Errors e_k = ||xi_k - xi_final|| along the trace's iterates.
double convergence_order(const OptimizerTrace& trace, std::span<const double> xi_final);

}  // namespace dualnewton
