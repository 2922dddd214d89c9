#pragma once

// Serialization: trace CSVs with a JSON status sidecar, log-linear targets and
// Beta-mixture datasets as JSON, so every run can be replayed from files.

#include <cstdint>
#include <filesystem>
#include <iosfwd>
#include <string>

#include <json.hpp>

#include "dualnewton/models.hpp"
#include "dualnewton/optimizers.hpp"

namespace dualnewton {

using json = nlohmann::json;

/// Header `iter,f,grad_l2,grad_gnorm,step_norm,spd,time_s`, one row per
/// iteration. Numeric columns other than time_s are written round-trip exact.
void write_trace_csv(std::ostream& out, const OptimizerTrace& trace);
void write_trace_csv(const std::filesystem::path& path, const OptimizerTrace& trace);

/// Terminal status, message, start state and final point.
json trace_status_json(const OptimizerTrace& trace);

/// One row `iter,xi_1,...,xi_n` per iterate including the start (iter 0).
void write_iterates_csv(const std::filesystem::path& path, const OptimizerTrace& trace);

/// A log-linear target over the full index and its moments over the model index.
struct TargetSpec {
  LogLinearModel target;
  SubsetIndex model_index;
  Vector eta_hat;
  double base_scale = 1.0;
  std::uint64_t seed = 0;
};

json to_json(const TargetSpec& spec);
/// Recomputes eta_hat from theta; throws std::invalid_argument on malformed input.
TargetSpec target_from_json(const json& j);

struct BetaDataset {
  Vector weights;
  Vector shapes;  // generating parameters
  Vector points;  // (x1, x2) flattened
  std::uint64_t seed = 0;
};

json to_json(const BetaDataset& data);
BetaDataset dataset_from_json(const json& j);

json read_json(const std::filesystem::path& path);
void write_json(const std::filesystem::path& path, const json& j);

/// "%.17g"; json numbers keep full precision on their own, this is for CSVs.
std::string format_double(double x);

}  // namespace dualnewton
