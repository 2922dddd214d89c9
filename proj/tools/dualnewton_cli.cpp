// dualnewton: experiment runner and validation front end.
//
//   dualnewton run --experiment exp1|exp2|exp3|validate [flags]
//   dualnewton validate [--out report.json]
//   dualnewton gen-target --n 8 --seed 42 --out target.json
//   dualnewton gen-data --seed 42 --out dataset.json
//
// Exit codes: 0 success, 2 validation failure, 3 optimizer failure, 4 bad config.

#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "dualnewton/experiments.hpp"
#include "dualnewton/validation.hpp"

using namespace dualnewton;

namespace {

constexpr int kValidationFailure = 2;
constexpr int kOptimizerFailure = 3;
constexpr int kBadConfig = 4;

struct Flags {
  std::string config_path;
  std::string experiment;
  std::vector<double> alphas;
  std::vector<std::string> methods;
  double lambda1 = 0, lambda2 = 0, tol = 0, mu0 = 0, sigma0 = 0, adam_lr = 0;
  double init_low = 0, init_high = 0, base_scale = 0, start_scale = 0;
  std::size_t n = 0, quad_nodes = 0, samples = 0;
  std::uint64_t seed = 0;
  int max_iters = 0;
  std::string out, target, data;
  bool expect_failure = false, damped = false;
};

/// Config file first, then every flag the user actually passed.
RunConfig resolve(const CLI::App& cmd, const Flags& f) {
  RunConfig cfg;
  if (!f.config_path.empty()) cfg = config_from_json(read_json(f.config_path));
  auto given = [&](const char* name) { return cmd.count(name) > 0; };
  if (given("--experiment")) cfg.experiment = parse_experiment(f.experiment);
  if (given("--alpha")) cfg.alphas = f.alphas;
  if (given("--method")) cfg.methods = f.methods;
  if (given("--lambda1")) cfg.lambda1 = f.lambda1;
  if (given("--lambda2")) cfg.lambda2 = f.lambda2;
  if (given("--n")) cfg.n = f.n;
  if (given("--seed")) cfg.seed = f.seed;
  if (given("--tol")) cfg.grad_tol = f.tol;
  if (given("--max-iters")) cfg.max_iters = f.max_iters;
  if (given("--mu0")) cfg.mu0 = f.mu0;
  if (given("--sigma0")) cfg.sigma0 = f.sigma0;
  if (given("--adam-lr")) cfg.adam.learning_rate = f.adam_lr;
  if (given("--out")) cfg.out_dir = f.out;
  if (given("--expect-failure")) cfg.expect_failure = f.expect_failure;
  if (given("--quad-nodes")) cfg.quad_nodes = f.quad_nodes;
  if (given("--samples")) cfg.samples = f.samples;
  if (given("--init-low")) cfg.init_low = f.init_low;
  if (given("--init-high")) cfg.init_high = f.init_high;
  if (given("--base-scale")) cfg.base_scale = f.base_scale;
  if (given("--start-scale")) cfg.start_scale = f.start_scale;
  if (given("--target")) cfg.target_path = f.target;
  if (given("--data")) cfg.data_path = f.data;
  if (given("--damped")) cfg.damped_newton = f.damped;
  cfg.validate();
  return cfg;
}

void add_run_flags(CLI::App* cmd, Flags& f) {
  cmd->add_option("--config", f.config_path, "JSON config; flags override its keys");
  cmd->add_option("--experiment", f.experiment, "exp1, exp2, exp3 or validate");
  cmd->add_option("--alpha", f.alphas, "alpha of the Newton connection (repeatable)")
      ->allow_extra_args(false);
  cmd->add_option("--method", f.methods, "newton, natural_gradient, mirror_descent, adam")
      ->allow_extra_args(false);
  cmd->add_option("--lambda1", f.lambda1, "exp1 singleton regularization");
  cmd->add_option("--lambda2", f.lambda2, "exp1 pair regularization");
  cmd->add_option("--n", f.n, "exp1 number of binary variables");
  cmd->add_option("--seed", f.seed, "run seed");
  cmd->add_option("--tol", f.tol, "stop when ||G^-1 grad f||_2 < tol");
  cmd->add_option("--max-iters", f.max_iters, "iteration cap per run");
  cmd->add_option("--mu0", f.mu0, "exp2 initial mu");
  cmd->add_option("--sigma0", f.sigma0, "exp2 initial sigma");
  cmd->add_option("--adam-lr", f.adam_lr, "Adam learning rate");
  cmd->add_option("--out", f.out, "output directory");
  cmd->add_flag("--expect-failure", f.expect_failure,
                "exit 0 even when a run ends in DomainFailure or SingularHessian");
  cmd->add_option("--quad-nodes", f.quad_nodes, "exp3 graded Gauss-Legendre nodes per axis");
  cmd->add_option("--samples", f.samples, "exp3 dataset size");
  cmd->add_option("--init-low", f.init_low, "exp1 initial theta lower bound");
  cmd->add_option("--init-high", f.init_high, "exp1 initial theta upper bound");
  cmd->add_option("--base-scale", f.base_scale, "exp1 target scale");
  cmd->add_option("--start-scale", f.start_scale, "exp3 start as a multiple of the true shapes");
  cmd->add_option("--target", f.target, "exp1 target JSON instead of generating one");
  cmd->add_option("--data", f.data, "exp3 dataset JSON instead of sampling one");
  cmd->add_flag("--damped", f.damped, "Wolfe search on certified-SPD Newton steps");
}

int do_validate(const std::string& out, std::uint64_t seed) {
  ValidationOptions opt;
  opt.seed = seed;
  const auto checks = validation_checks(opt);
  const json report = validation_report(checks);
  for (const auto& c : checks) {
    std::printf("%-4s %-44s residual %.3e (%s %.1e)\n", c.passed ? "ok" : "FAIL", c.name.c_str(),
                c.residual, c.sense == "max" ? "<" : ">=", c.tolerance);
  }
  if (!out.empty()) write_json(out, report);
  return report["passed"].get<bool>() ? 0 : kValidationFailure;
}

int do_run(const RunConfig& cfg) {
  if (cfg.experiment == ExperimentId::Validate) {
    return do_validate(cfg.out_dir + "/validation.json", cfg.seed);
  }
  const ExperimentResult res = run_experiment(cfg);
  std::printf("%-26s %-16s %6s %12s %12s %10s %8s\n", "variant", "status", "iters", "time_s",
              "final_grad", "order", "all_spd");
  for (const auto& v : res.variants) {
    const char* order = "-";
    char buf[32];
    if (v.order) {
      std::snprintf(buf, sizeof buf, "%.3f", *v.order);
      order = buf;
    }
    std::printf("%-26s %-16s %6d %12.6f %12.3e %10s %8s\n", v.name.c_str(),
                to_string(v.trace.status), v.trace.iterations(), v.trace.total_time(),
                v.trace.final_grad_l2(), order, v.trace.all_spd() ? "yes" : "no");
  }
  std::printf("artifacts in %s\n", cfg.out_dir.c_str());
  return res.exit_code == 0 ? 0 : kOptimizerFailure;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Dual Riemannian Newton method and first-order baselines on statistical manifolds"};
  app.require_subcommand(1);

  Flags run_flags;
  CLI::App* run = app.add_subcommand("run", "run an experiment and write its artifacts");
  add_run_flags(run, run_flags);

  std::string validate_out;
  std::uint64_t validate_seed = 7;
  CLI::App* validate = app.add_subcommand("validate", "run the property suite");
  validate->add_option("--out", validate_out, "write the JSON report here");
  validate->add_option("--seed", validate_seed, "seed for the random test points");

  std::size_t target_n = 8;
  double target_scale = 1.0;
  std::uint64_t target_seed = 42;
  std::string target_out = "target.json";
  CLI::App* gen_target_cmd = app.add_subcommand("gen-target", "generate a log-linear target");
  gen_target_cmd->add_option("--n", target_n, "number of binary variables (<= 12)");
  gen_target_cmd->add_option("--base-scale", target_scale, "theta_A ~ U[-s/|A|, s/|A|]");
  gen_target_cmd->add_option("--seed", target_seed, "seed");
  gen_target_cmd->add_option("--out", target_out, "output JSON");

  Flags data_flags;
  CLI::App* gen_data_cmd = app.add_subcommand("gen-data", "sample a Beta-mixture dataset");
  gen_data_cmd->add_option("--config", data_flags.config_path, "JSON config");
  gen_data_cmd->add_option("--seed", data_flags.seed, "seed");
  gen_data_cmd->add_option("--samples", data_flags.samples, "number of points");
  gen_data_cmd->add_option("--out", data_flags.out, "output JSON")->default_val("dataset.json");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kBadConfig;
  }

  try {
    if (*run) return do_run(resolve(*run, run_flags));
    if (*validate) return do_validate(validate_out, validate_seed);
    if (*gen_target_cmd) {
      write_json(target_out, to_json(gen_target(target_n, target_scale, target_seed)));
      std::printf("wrote %s\n", target_out.c_str());
      return 0;
    }
    if (*gen_data_cmd) {
      RunConfig cfg;
      if (!data_flags.config_path.empty()) cfg = config_from_json(read_json(data_flags.config_path));
      if (gen_data_cmd->count("--seed")) cfg.seed = data_flags.seed;
      if (gen_data_cmd->count("--samples")) cfg.samples = data_flags.samples;
      cfg.validate();
      write_json(data_flags.out, to_json(gen_data(cfg)));
      std::printf("wrote %s\n", data_flags.out.c_str());
      return 0;
    }
  } catch (const std::invalid_argument& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kBadConfig;
  } catch (const NumericError& e) {
    std::fprintf(stderr, "numeric error: %s\n", e.what());
    return kOptimizerFailure;
  }
  return 0;
}
