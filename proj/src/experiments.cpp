#include "dualnewton/experiments.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <random>
#include <set>

#include "dualnewton/models.hpp"

namespace dualnewton {

const char* to_string(ExperimentId id) {
  switch (id) {
    case ExperimentId::Exp1: return "exp1";
    case ExperimentId::Exp2: return "exp2";
    case ExperimentId::Exp3: return "exp3";
    case ExperimentId::Validate: return "validate";
  }
  return "unknown";
}

ExperimentId parse_experiment(const std::string& name) {
  if (name == "exp1") return ExperimentId::Exp1;
  if (name == "exp2") return ExperimentId::Exp2;
  if (name == "exp3") return ExperimentId::Exp3;
  if (name == "validate") return ExperimentId::Validate;
  throw ConfigError("unknown experiment '" + name + "'");
}

// ---------------------------------------------------------------------------
// Config

StopRule RunConfig::stop_rule() const {
  StopRule s;
  s.grad_tol = grad_tol.value_or(experiment == ExperimentId::Exp3 ? 1e-8 : 1e-6);
  s.max_iters = max_iters;
  return s;
}

std::vector<double> RunConfig::alpha_list() const {
  if (!alphas.empty()) return alphas;
  switch (experiment) {
    case ExperimentId::Exp1: return {-1.0, -0.5, 0.0, 0.5, 1.0};
    case ExperimentId::Exp2: return {-0.4, -0.2, 0.0, 0.2, 0.4};
    case ExperimentId::Exp3: return {0.0, 0.25, 0.5, 0.75, 1.0};
    case ExperimentId::Validate: break;
  }
  return {};
}

std::vector<std::string> RunConfig::method_list() const {
  if (!methods.empty()) return methods;
  if (experiment == ExperimentId::Exp1) {
    return {"newton", "natural_gradient", "mirror_descent", "adam"};
  }
  return {"newton", "natural_gradient", "adam"};
}

void RunConfig::validate() const {
  for (double a : alphas) {
    if (!(a >= -1.0 && a <= 1.0)) throw ConfigError("alpha values must lie in [-1, 1]");
  }
  const std::set<std::string> known{"newton", "natural_gradient", "mirror_descent", "adam"};
  for (const auto& m : methods) {
    if (!known.count(m)) throw ConfigError("unknown method '" + m + "'");
    if (m == "mirror_descent" && experiment != ExperimentId::Exp1) {
      throw ConfigError("mirror_descent needs the log-linear experiment");
    }
  }
  if (grad_tol && !(*grad_tol > 0.0)) throw ConfigError("tol must be positive");
  if (max_iters < 0) throw ConfigError("max-iters must be nonnegative");
  if (!(adam.learning_rate > 0.0)) throw ConfigError("adam-lr must be positive");
  if (lambda1 < 0.0 || lambda2 < 0.0) throw ConfigError("lambdas must be nonnegative");
  if (n < 1 || n > 12) throw ConfigError("n must be in 1..12");
  if (!(init_low <= init_high)) throw ConfigError("init range is empty");
  if (base_scale < 0.0) throw ConfigError("base_scale must be nonnegative");
  if (target_p.size() != 4 || !(target_p[2] > 0.0) || !(target_p[3] > 0.0)) {
    throw ConfigError("target_p must be (mu1, mu2, sigma1 > 0, sigma2 > 0)");
  }
  if (!(sigma0 > 0.0)) throw ConfigError("sigma0 must be positive");
  if (experiment == ExperimentId::Exp2 &&
      !AlphaDivergenceObjective{alpha_bar, target_p[0], target_p[1], target_p[2], target_p[3]}
           .integrable(sigma0)) {
    throw ConfigError("sigma0 lies outside the region where the divergence is finite");
  }
  if (mixture_shapes.size() != 2 * mixture_weights.size() || mixture_weights.empty()) {
    throw ConfigError("mixture needs one (a, b) pair per weight");
  }
  if (quad_nodes < 2) throw ConfigError("quad-nodes must be at least 2");
  if (samples == 0) throw ConfigError("samples must be positive");
  if (!(start_scale > 0.0)) throw ConfigError("start_scale must be positive");
}

namespace {

template <typename T>
void take(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

}  // namespace

RunConfig config_from_json(const json& j, RunConfig cfg) {
  static const std::set<std::string> keys{
      "experiment", "alphas",     "methods",     "seed",         "tol",
      "max_iters",  "adam_lr",    "adam_beta1",  "adam_beta2",   "adam_epsilon",
      "damped",     "out",        "expect_failure", "lambda1",  "lambda2",
      "n",          "base_scale", "init_low",    "init_high",    "target",
      "alpha_bar",  "target_p",   "mu0",         "sigma0",       "mixture_weights",
      "mixture_shapes", "samples", "quad_nodes", "start_scale",  "data"};
  if (!j.is_object()) throw ConfigError("config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!keys.count(it.key())) throw ConfigError("unknown config key '" + it.key() + "'");
  }
  try {
    if (j.contains("experiment")) cfg.experiment = parse_experiment(j["experiment"].get<std::string>());
    take(j, "alphas", cfg.alphas);
    take(j, "methods", cfg.methods);
    take(j, "seed", cfg.seed);
    if (j.contains("tol")) cfg.grad_tol = j["tol"].get<double>();
    take(j, "max_iters", cfg.max_iters);
    take(j, "adam_lr", cfg.adam.learning_rate);
    take(j, "adam_beta1", cfg.adam.beta1);
    take(j, "adam_beta2", cfg.adam.beta2);
    take(j, "adam_epsilon", cfg.adam.epsilon);
    take(j, "damped", cfg.damped_newton);
    take(j, "out", cfg.out_dir);
    take(j, "expect_failure", cfg.expect_failure);
    take(j, "lambda1", cfg.lambda1);
    take(j, "lambda2", cfg.lambda2);
    take(j, "n", cfg.n);
    take(j, "base_scale", cfg.base_scale);
    take(j, "init_low", cfg.init_low);
    take(j, "init_high", cfg.init_high);
    if (j.contains("target")) cfg.target_path = j["target"].get<std::string>();
    take(j, "alpha_bar", cfg.alpha_bar);
    take(j, "target_p", cfg.target_p);
    take(j, "mu0", cfg.mu0);
    take(j, "sigma0", cfg.sigma0);
    take(j, "mixture_weights", cfg.mixture_weights);
    take(j, "mixture_shapes", cfg.mixture_shapes);
    take(j, "samples", cfg.samples);
    take(j, "quad_nodes", cfg.quad_nodes);
    take(j, "start_scale", cfg.start_scale);
    if (j.contains("data")) cfg.data_path = j["data"].get<std::string>();
  } catch (const json::exception& e) {
    throw ConfigError(std::string("bad config value: ") + e.what());
  }
  return cfg;
}

json to_json(const RunConfig& cfg) {
  json j{{"experiment", to_string(cfg.experiment)},
         {"alphas", cfg.alpha_list()},
         {"methods", cfg.method_list()},
         {"seed", cfg.seed},
         {"tol", cfg.stop_rule().grad_tol},
         {"max_iters", cfg.max_iters},
         {"adam_lr", cfg.adam.learning_rate},
         {"adam_beta1", cfg.adam.beta1},
         {"adam_beta2", cfg.adam.beta2},
         {"adam_epsilon", cfg.adam.epsilon},
         {"damped", cfg.damped_newton},
         {"out", cfg.out_dir},
         {"expect_failure", cfg.expect_failure}};
  switch (cfg.experiment) {
    case ExperimentId::Exp1:
      j.update({{"lambda1", cfg.lambda1},
                {"lambda2", cfg.lambda2},
                {"n", cfg.n},
                {"base_scale", cfg.base_scale},
                {"init_low", cfg.init_low},
                {"init_high", cfg.init_high}});
      if (cfg.target_path) j["target"] = *cfg.target_path;
      break;
    case ExperimentId::Exp2:
      j.update({{"alpha_bar", cfg.alpha_bar},
                {"target_p", cfg.target_p},
                {"mu0", cfg.mu0},
                {"sigma0", cfg.sigma0}});
      break;
    case ExperimentId::Exp3:
      j.update({{"mixture_weights", cfg.mixture_weights},
                {"mixture_shapes", cfg.mixture_shapes},
                {"samples", cfg.samples},
                {"quad_nodes", cfg.quad_nodes},
                {"start_scale", cfg.start_scale}});
      if (cfg.data_path) j["data"] = *cfg.data_path;
      break;
    case ExperimentId::Validate: break;
  }
  return j;
}

// ---------------------------------------------------------------------------
// Problem generation

TargetSpec gen_target(std::size_t n, double base_scale, std::uint64_t seed) {
  if (n < 1 || n > 12) throw ConfigError("gen_target needs 1 <= n <= 12");
  TargetSpec spec;
  spec.base_scale = base_scale;
  spec.seed = seed;
  SubsetIndex full = SubsetIndex::full(n);
  Vector theta(full.size(), 0.0);
  std::mt19937_64 rng(seed);
  for (std::size_t a = 0; a < full.size(); ++a) {
    const double s = base_scale / static_cast<double>(full.order(a));
    if (s > 0.0) theta[a] = std::uniform_real_distribution<double>(-s, s)(rng);
  }
  spec.target = LogLinearModel{std::move(full), std::move(theta)};
  spec.model_index = SubsetIndex::boltzmann(n);
  spec.eta_hat = loglinear_moments(spec.target, spec.model_index);
  return spec;
}

BetaDataset gen_data(const RunConfig& cfg) {
  BetaMixtureModel truth{cfg.mixture_weights, cfg.mixture_shapes};
  BetaDataset d;
  d.weights = cfg.mixture_weights;
  d.shapes = cfg.mixture_shapes;
  d.seed = cfg.seed;
  d.points = beta_mixture_sample(truth, cfg.samples, cfg.seed);
  return d;
}

// ---------------------------------------------------------------------------
// Runner

namespace {

std::string variant_name(const std::string& method, std::optional<double> alpha) {
  if (!alpha) return method;
  char buf[48];
  std::snprintf(buf, sizeof buf, "%s_a%+.2f", method.c_str(), *alpha);
  return buf;
}

/// A few extra Newton iterations from `xi`; returns the iterate with the
/// smallest gradient norm. Used as xi_final for convergence-order estimates.
Vector refine_optimum(const DualStructure& ds, const Objective& obj, const Vector& xi,
                      JacobianMode mode) {
  StopRule rule;
  rule.grad_tol = 1e-300;
  rule.max_iters = 3;
  NewtonOptions opt;
  opt.jacobian = mode;
  const OptimizerTrace t = dual_newton_run(ds, obj, xi, rule, opt);
  Vector best = xi;
  double best_norm = t.grad_l2_0;
  for (std::size_t k = 0; k < t.records.size(); ++k) {
    if (t.records[k].grad_l2 < best_norm) {
      best_norm = t.records[k].grad_l2;
      best = t.iterates[k + 1];
    }
  }
  return best;
}

struct Problem {
  Objective objective;
  std::function<DualStructure(double)> structure;
  Vector start;
  JacobianMode jacobian = JacobianMode::Analytic;
  double reference_alpha = 0.0;  // structure used to refine the optimum
  std::optional<KLProjectionObjective> kl;
  json artifacts;
  std::function<void(const std::filesystem::path&)> write_inputs;
};

Problem build_exp1(const RunConfig& cfg) {
  TargetSpec spec = cfg.target_path ? target_from_json(read_json(*cfg.target_path))
                                    : gen_target(cfg.n, cfg.base_scale, cfg.seed);
  Problem p;
  p.kl = KLProjectionObjective::from_target(spec.target, spec.model_index, cfg.lambda1,
                                            cfg.lambda2);
  p.objective = make_objective(*p.kl);
  const SubsetIndex index = spec.model_index;
  p.structure = [index](double alpha) { return loglinear_dual_structure(index, alpha); };
  std::seed_seq seq{cfg.seed, std::uint64_t{1}};
  std::mt19937_64 rng(seq);
  std::uniform_real_distribution<double> init(cfg.init_low, cfg.init_high);
  p.start.resize(index.size());
  for (double& v : p.start) v = init(rng);
  p.reference_alpha = 1.0;
  p.artifacts["target"] = "target.json";
  p.write_inputs = [spec](const std::filesystem::path& dir) {
    write_json(dir / "target.json", to_json(spec));
  };
  return p;
}

Problem build_exp2(const RunConfig& cfg) {
  AlphaDivergenceObjective ad;
  ad.alpha_bar = cfg.alpha_bar;
  ad.mu1 = cfg.target_p[0];
  ad.mu2 = cfg.target_p[1];
  ad.sigma1 = cfg.target_p[2];
  ad.sigma2 = cfg.target_p[3];
  if (!ad.integrable(cfg.sigma0)) {
    throw ConfigError("sigma0 violates the integrability condition");
  }
  Problem p;
  p.objective = make_objective(ad);
  p.structure = [](double alpha) { return gaussian_dual_structure(alpha); };
  p.start = {cfg.mu0, cfg.sigma0};
  return p;
}

Problem build_exp3(const RunConfig& cfg) {
  BetaDataset data = cfg.data_path ? dataset_from_json(read_json(*cfg.data_path)) : gen_data(cfg);
  if (data.weights.size() != cfg.mixture_weights.size()) {
    throw ConfigError("dataset and config disagree on the number of components");
  }
  BetaMixtureModel model{data.weights, cfg.mixture_shapes,
                         QuadratureRule::graded_gauss_legendre(cfg.quad_nodes)};
  model.validate();
  Problem p;
  p.objective = make_objective(BetaMixtureNLL{data.weights, data.points});
  p.structure = [model](double alpha) { return beta_mixture_dual_structure(model, alpha); };
  p.start = scaled(cfg.start_scale, cfg.mixture_shapes);
  p.jacobian = JacobianMode::FiniteDifference;
  p.artifacts["dataset"] = "dataset.json";
  p.write_inputs = [data](const std::filesystem::path& dir) {
    write_json(dir / "dataset.json", to_json(data));
  };
  return p;
}

}  // namespace

ExperimentResult run_experiment(const RunConfig& cfg, bool write_files) {
  cfg.validate();
  Problem prob;
  switch (cfg.experiment) {
    case ExperimentId::Exp1: prob = build_exp1(cfg); break;
    case ExperimentId::Exp2: prob = build_exp2(cfg); break;
    case ExperimentId::Exp3: prob = build_exp3(cfg); break;
    case ExperimentId::Validate: throw ConfigError("use run_validation for 'validate'");
  }
  const StopRule stop = cfg.stop_rule();
  const DualStructure fisher = prob.structure(0.0);  // metric does not depend on alpha

  ExperimentResult result;
  for (const std::string& method : cfg.method_list()) {
    if (method == "newton") {
      NewtonOptions opt;
      opt.jacobian = prob.jacobian;
      opt.damped = cfg.damped_newton;
      for (double alpha : cfg.alpha_list()) {
        const DualStructure ds = prob.structure(alpha);
        result.variants.push_back({variant_name(method, alpha), method, alpha,
                                   dual_newton_run(ds, prob.objective, prob.start, stop, opt),
                                   std::nullopt});
      }
    } else if (method == "natural_gradient") {
      result.variants.push_back({method, method, std::nullopt,
                                 natural_gradient_run(fisher, prob.objective, prob.start, stop),
                                 std::nullopt});
    } else if (method == "mirror_descent") {
      result.variants.push_back({method, method, std::nullopt,
                                 mirror_descent_run(fisher, *prob.kl, prob.start, stop),
                                 std::nullopt});
    } else if (method == "adam") {
      result.variants.push_back({method, method, std::nullopt,
                                 adam_run(fisher, prob.objective, prob.start, stop, cfg.adam),
                                 std::nullopt});
    }
  }

  // Reference optimum for the summary: the best converged run refined with a
  // few Newton steps. Orders use each run's own final iterate, since errors
  // against a shared reference bottom out at its rounding floor.
  const VariantResult* best = nullptr;
  for (const auto& v : result.variants) {
    if (v.trace.status != RunStatus::Converged) continue;
    if (!best || v.trace.final_grad_l2() < best->trace.final_grad_l2()) best = &v;
  }
  if (best) {
    try {
      result.reference_optimum = refine_optimum(prob.structure(prob.reference_alpha),
                                                prob.objective, best->trace.final_point(),
                                                prob.jacobian);
    } catch (const NumericError&) {
      result.reference_optimum = best->trace.final_point();
    }
  }
  for (auto& v : result.variants) {
    if (v.trace.status != RunStatus::Converged) continue;
    try {
      v.order = convergence_order(v.trace, v.trace.final_point());
    } catch (const NumericError&) {
    }
  }

  bool failed = false;
  json variants = json::array();
  std::vector<std::string> stems;
  for (const auto& v : result.variants) {
    const OptimizerTrace& t = v.trace;
    if (t.status == RunStatus::DomainFailure || t.status == RunStatus::SingularHessian) {
      failed = true;
    }
    json entry = trace_status_json(t);
    entry["name"] = v.name;
    entry["alpha"] = v.alpha ? json(*v.alpha) : json(nullptr);
    entry["csv"] = "trace_" + v.name + ".csv";
    entry["total_time_s"] = t.total_time();
    entry["mean_iter_time_s"] = t.iterations() > 0 ? t.total_time() / t.iterations() : 0.0;
    entry["final_f"] = t.records.empty() ? t.f0 : t.records.back().f;
    entry["final_grad_gnorm"] = t.records.empty() ? t.grad_gnorm_0 : t.records.back().grad_gnorm;
    entry["convergence_order"] = v.order ? json(*v.order) : json(nullptr);
    variants.push_back(entry);
    stems.push_back("trace_" + v.name);
  }
  result.exit_code = failed && !cfg.expect_failure ? 3 : 0;

  result.summary = json{
      {"experiment", to_string(cfg.experiment)},
      {"config", to_json(cfg)},
      {"start", prob.start},
      {"reference_optimum",
       result.reference_optimum ? json(*result.reference_optimum) : json(nullptr)},
      {"timing",
       {{"clock", "std::chrono::steady_clock"},
        {"includes", "objective, metric and connection evaluations, linear solves, line searches"},
        {"excludes", "problem construction, target and dataset generation, file output"}}},
      {"stop_rule", {{"norm", "l2 norm of G^{-1} grad f"},
                     {"grad_tol", stop.grad_tol},
                     {"max_iters", stop.max_iters}}},
      {"variants", variants},
      {"failure", failed},
      {"artifacts", prob.artifacts}};

  if (write_files) {
    const std::filesystem::path dir(cfg.out_dir);
    std::filesystem::create_directories(dir);
    write_json(dir / "config.json", to_json(cfg));
    if (prob.write_inputs) prob.write_inputs(dir);
    for (const auto& v : result.variants) {
      write_trace_csv(dir / ("trace_" + v.name + ".csv"), v.trace);
      write_iterates_csv(dir / ("iterates_" + v.name + ".csv"), v.trace);
    }
    write_json(dir / "summary.json", result.summary);
    std::ofstream(dir / "plot_convergence.py")
        << plot_script(std::string(to_string(cfg.experiment)) + ": gradient norm", stems);
  }
  return result;
}

std::string plot_script(const std::string& title, const std::vector<std::string>& stems) {
  std::string s =
      "#!/usr/bin/env python3\n"
      "# Gradient norm per iteration for each run. Reads only the CSVs next to\n"
      "# this script; writes convergence.png.\n"
      "import csv\n"
      "import os\n"
      "\n"
      "import matplotlib\n"
      "matplotlib.use(\"Agg\")\n"
      "import matplotlib.pyplot as plt\n"
      "\n"
      "HERE = os.path.dirname(os.path.abspath(__file__))\n"
      "RUNS = [\n";
  for (const auto& stem : stems) s += "    \"" + stem + "\",\n";
  s += "]\n"
       "\n"
       "fig, ax = plt.subplots(figsize=(7, 4.5))\n"
       "for stem in RUNS:\n"
       "    with open(os.path.join(HERE, stem + \".csv\")) as fh:\n"
       "        rows = list(csv.DictReader(fh))\n"
       "    if not rows:\n"
       "        continue\n"
       "    it = [int(r[\"iter\"]) for r in rows]\n"
       "    g = [max(float(r[\"grad_l2\"]), 1e-300) for r in rows]\n"
       "    ax.semilogy(it, g, marker=\".\", label=stem.removeprefix(\"trace_\"))\n"
       "ax.set_xlabel(\"iteration\")\n"
       "ax.set_ylabel(\"||G^-1 grad f||_2\")\n"
       "ax.set_title(\"" + title + "\")\n"
       "ax.legend(fontsize=8)\n"
       "fig.tight_layout()\n"
       "fig.savefig(os.path.join(HERE, \"convergence.png\"), dpi=150)\n";
  return s;
}

}  // namespace dualnewton
