#pragma once

// Executable property suite: duality of the connections, the affine-chart
// Newton identities, gradient checks and closed-form cross-checks, each
// reported with its measured residual.

#include <cstdint>
#include <string>
#include <vector>

#include "dualnewton/io.hpp"

namespace dualnewton {

struct CheckResult {
  std::string name;
  bool passed = false;
  double residual = 0.0;
  double tolerance = 0.0;
  /// "max" checks pass when residual < tolerance, "min" when residual >= tolerance.
  std::string sense = "max";
};

struct ValidationOptions {
  std::uint64_t seed = 7;
  std::size_t points = 20;       // random points per analytic-model check
  std::size_t beta_points = 5;   // quadrature-backed checks are costlier
  std::size_t quad_nodes = 64;
};

std::vector<CheckResult> validation_checks(const ValidationOptions& opt = {});

/// {"passed": bool, "checks": [{name, passed, residual, tolerance, sense}]}.
json validation_report(const std::vector<CheckResult>& checks);

}  // namespace dualnewton
