#pragma once

// Experiment runners behind the CLI: configuration, problem construction,
// one optimizer run per method/alpha variant, and the emitted artifacts
// (trace CSVs, summary JSON, plot script).

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "dualnewton/io.hpp"
#include "dualnewton/optimizers.hpp"

namespace dualnewton {

enum class ExperimentId { Exp1, Exp2, Exp3, Validate };

const char* to_string(ExperimentId id);
ExperimentId parse_experiment(const std::string& name);

/// Invalid configuration; the CLI maps it to exit code 4.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

struct RunConfig {
  ExperimentId experiment = ExperimentId::Exp1;
  std::vector<double> alphas;  // empty: the experiment's default list
  std::vector<std::string> methods;  // empty: every method the experiment supports
  std::uint64_t seed = 42;
  std::optional<double> grad_tol;  // default 1e-6, 1e-8 for exp3
  int max_iters = 10000;
  AdamOptions adam{};
  bool damped_newton = false;
  std::string out_dir = "out";
  bool expect_failure = false;

  // exp1
  double lambda1 = 0.5;
  double lambda2 = 0.5;
  std::size_t n = 4;
  double base_scale = 1.0;
  double init_low = -0.25;
  double init_high = 0.2;
  std::optional<std::string> target_path;

  // exp2
  double alpha_bar = 3.0;
  Vector target_p{2.0, 1.5, 1.3, 0.7};  // (mu1, mu2, sigma1, sigma2)
  double mu0 = 0.5;
  double sigma0 = 2.0;

  // exp3
  Vector mixture_weights{0.35, 0.4, 0.25};
  Vector mixture_shapes{2.0, 5.0, 3.0, 2.0, 5.0, 3.5};  // (a_k, b_k) pairs
  std::size_t samples = 5000;
  std::size_t quad_nodes = 64;
  double start_scale = 1.1;  // start = start_scale * generating shapes
  std::optional<std::string> data_path;

  StopRule stop_rule() const;
  std::vector<double> alpha_list() const;
  std::vector<std::string> method_list() const;
  /// Throws ConfigError.
  void validate() const;
};

/// Overrides `base` with the keys present in `j`. Throws ConfigError on
/// unknown keys or wrong types.
RunConfig config_from_json(const json& j, RunConfig base = {});
json to_json(const RunConfig& cfg);

/// theta_A ~ U[-s/|A|, s/|A|] over every nonempty subset of n <= 12
/// variables, drawn in index order; eta_hat over the Boltzmann index.
TargetSpec gen_target(std::size_t n, double base_scale, std::uint64_t seed);

/// Samples from the configured mixture with the run seed.
BetaDataset gen_data(const RunConfig& cfg);

struct VariantResult {
  std::string name;  // also the CSV stem
  std::string method;
  std::optional<double> alpha;
  OptimizerTrace trace;
  std::optional<double> order;
};

struct ExperimentResult {
  std::vector<VariantResult> variants;
  std::optional<Vector> reference_optimum;
  json summary;
  int exit_code = 0;  // 0, or 3 on an unexpected optimizer failure
};

/// Runs every variant of cfg.experiment. When `write_files` is set, writes
/// config.json, the target or dataset, trace_<variant>.csv and .json,
/// summary.json and plot_convergence.py under cfg.out_dir.
ExperimentResult run_experiment(const RunConfig& cfg, bool write_files = true);

/// Standalone matplotlib script plotting grad_l2 per iteration from the
/// listed CSV stems, resolved relative to the script's own directory.
std::string plot_script(const std::string& title, const std::vector<std::string>& stems);

}  // namespace dualnewton
