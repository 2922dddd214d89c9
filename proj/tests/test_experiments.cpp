#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

#include "dualnewton/experiments.hpp"
#include "dualnewton/io.hpp"

using namespace dualnewton;
namespace fs = std::filesystem;

namespace {

struct TempDir {
  fs::path path;
  explicit TempDir(const std::string& tag) {
    path = fs::temp_directory_path() / ("dualnewton_test_" + tag + "_" + std::to_string(::getpid()));
    fs::remove_all(path);
    fs::create_directories(path);
  }
  ~TempDir() { fs::remove_all(path); }
};

std::vector<std::string> read_lines(const fs::path& p) {
  std::ifstream in(p);
  std::vector<std::string> lines;
  for (std::string line; std::getline(in, line);) lines.push_back(line);
  return lines;
}

// CSV rows with the trailing time_s column removed.
std::vector<std::string> untimed_rows(const fs::path& p) {
  std::vector<std::string> rows = read_lines(p);
  for (std::string& r : rows) r = r.substr(0, r.rfind(','));
  return rows;
}

}  // namespace

TEST_CASE("config parsing and validation") {
  const RunConfig cfg = config_from_json(json{{"experiment", "exp2"}, {"alphas", {-0.2, 0.2}},
                                              {"seed", 9}, {"mu0", 0.1}});
  CHECK(cfg.experiment == ExperimentId::Exp2);
  CHECK(cfg.alpha_list() == std::vector<double>{-0.2, 0.2});
  CHECK(cfg.seed == 9);
  CHECK(cfg.mu0 == 0.1);
  CHECK(cfg.stop_rule().grad_tol == 1e-6);

  RunConfig e3;
  e3.experiment = ExperimentId::Exp3;
  CHECK(e3.stop_rule().grad_tol == 1e-8);
  CHECK(e3.alpha_list() == std::vector<double>{0.0, 0.25, 0.5, 0.75, 1.0});

  const RunConfig back = config_from_json(to_json(cfg));
  CHECK(to_json(back) == to_json(cfg));

  CHECK_THROWS_AS(config_from_json(json{{"bogus", 1}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"experiment", "exp9"}}), ConfigError);
  CHECK_THROWS_AS(config_from_json(json{{"seed", "x"}}), ConfigError);
  RunConfig bad;
  bad.alphas = {1.5};
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.lambda1 = -1;
  CHECK_THROWS_AS(bad.validate(), ConfigError);
  bad = RunConfig{};
  bad.experiment = ExperimentId::Exp2;
  bad.sigma0 = 0.5;  // outside the integrable region
  CHECK_THROWS_AS(bad.validate(), ConfigError);
}

TEST_CASE("gen_target") {
  const TargetSpec flat = gen_target(4, 0.0, 1);
  for (std::size_t a = 0; a < flat.model_index.size(); ++a) {
    CHECK(flat.eta_hat[a] == (flat.model_index.order(a) == 1 ? 0.5 : 0.25));
  }
  const TargetSpec t = gen_target(6, 1.0, 77);
  CHECK(t.target.index.size() == 63);
  CHECK(t.model_index.size() == 21);
  for (std::size_t a = 0; a < t.target.index.size(); ++a) {
    CHECK(std::abs(t.target.theta[a]) <= 1.0 / static_cast<double>(t.target.index.order(a)));
  }
  CHECK(gen_target(6, 1.0, 77).target.theta == t.target.theta);
  CHECK(gen_target(6, 1.0, 78).target.theta != t.target.theta);

  const TargetSpec back = target_from_json(to_json(t));
  CHECK(back.target.theta == t.target.theta);
  CHECK(back.target.index == t.target.index);
  CHECK(back.model_index == t.model_index);
  CHECK(back.eta_hat == t.eta_hat);
  CHECK(back.seed == 77);
  CHECK_THROWS_AS(target_from_json(json{{"n", 2}}), std::invalid_argument);
}

TEST_CASE("dataset round trip") {
  RunConfig cfg;
  cfg.experiment = ExperimentId::Exp3;
  cfg.samples = 50;
  const BetaDataset d = gen_data(cfg);
  CHECK(d.points.size() == 100);
  const BetaDataset back = dataset_from_json(to_json(d));
  CHECK(back.points == d.points);
  CHECK(back.weights == d.weights);
  CHECK(back.shapes == d.shapes);
  CHECK(back.seed == d.seed);
}

TEST_CASE("trace CSV format") {
  OptimizerTrace t;
  t.iterates = {Vector{0.0}, Vector{1.0}};
  t.records.push_back({1, 0.1, 2.5e-7, 1e-7, 0.5, false, 0.25});
  std::ostringstream out;
  write_trace_csv(out, t);
  CHECK(out.str() ==
        "iter,f,grad_l2,grad_gnorm,step_norm,spd,time_s\n"
        "1,0.10000000000000001,2.4999999999999999e-07,9.9999999999999995e-08,0.5,0,0.250000\n");
}

TEST_CASE("experiment 2 artifacts are reproducible and consistent") {
  TempDir a("a"), b("b");
  RunConfig cfg;
  cfg.experiment = ExperimentId::Exp2;
  cfg.out_dir = a.path.string();
  const ExperimentResult r1 = run_experiment(cfg);
  cfg.out_dir = b.path.string();
  const ExperimentResult r2 = run_experiment(cfg);
  CHECK(r1.exit_code == 0);
  REQUIRE(r1.variants.size() == 7);  // five Newton alphas, natural gradient, Adam

  for (const auto& v : r1.summary["variants"]) {
    const std::string csv = v["csv"].get<std::string>();
    const auto rows = read_lines(a.path / csv);
    CHECK(rows.size() == v["iterations"].get<std::size_t>() + 1);
    CHECK(untimed_rows(a.path / csv) == untimed_rows(b.path / csv));
    const std::string stem = csv.substr(0, csv.size() - 4);
    CHECK(read_lines(a.path / ("iterates_" + stem.substr(6) + ".csv")) ==
          read_lines(b.path / ("iterates_" + stem.substr(6) + ".csv")));
  }
  json c1 = read_json(a.path / "config.json"), c2 = read_json(b.path / "config.json");
  c1.erase("out");
  c2.erase("out");
  CHECK(c1 == c2);

  // The plot script names only the emitted CSVs, relative to its own folder.
  std::ifstream script(a.path / "plot_convergence.py");
  const std::string text((std::istreambuf_iterator<char>(script)), {});
  CHECK(text.find(a.path.string()) == std::string::npos);
  for (const auto& v : r1.variants) CHECK(text.find("trace_" + v.name) != std::string::npos);

  const json summary = read_json(a.path / "summary.json");
  CHECK(summary["experiment"] == "exp2");
  CHECK(summary["timing"]["clock"].is_string());
}

TEST_CASE("experiment 1 writes a replayable target") {
  TempDir a("t");
  RunConfig cfg;
  cfg.out_dir = a.path.string();
  cfg.methods = {"newton"};
  cfg.alphas = {1.0};
  const ExperimentResult r = run_experiment(cfg);
  CHECK(r.exit_code == 0);
  const TargetSpec target = target_from_json(read_json(a.path / "target.json"));
  CHECK(target.target.theta == gen_target(cfg.n, cfg.base_scale, cfg.seed).target.theta);

  // Feeding the written target back reproduces the trace exactly.
  TempDir b("t2");
  RunConfig replay = cfg;
  replay.out_dir = b.path.string();
  replay.target_path = (a.path / "target.json").string();
  replay.seed = cfg.seed;
  run_experiment(replay);
  CHECK(untimed_rows(a.path / "trace_newton_a1.00.csv") ==
        untimed_rows(b.path / "trace_newton_a1.00.csv"));
}

TEST_CASE("failures set exit code 3 unless expected") {
  RunConfig cfg;
  cfg.lambda1 = 0.3;
  cfg.lambda2 = 0.8;
  cfg.n = 3;
  cfg.init_low = -2.0;
  cfg.init_high = 2.0;
  cfg.alphas = {0.0, -1.0};
  cfg.methods = {"newton"};
  cfg.max_iters = 200;
  int failures = 0, expected = 0;
  for (std::uint64_t seed = 1; seed <= 5; ++seed) {
    cfg.seed = seed;
    cfg.expect_failure = false;
    const ExperimentResult r = run_experiment(cfg, false);
    failures += r.exit_code == 3;
    cfg.expect_failure = true;
    expected += run_experiment(cfg, false).exit_code;
  }
  CHECK(failures > 0);
  CHECK(expected == 0);
}
