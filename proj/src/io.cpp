#include "dualnewton/io.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <stdexcept>

namespace dualnewton {

namespace {

std::ofstream open_out(const std::filesystem::path& path) {
  if (path.has_parent_path()) std::filesystem::create_directories(path.parent_path());
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

json finite_or_null(double x) { return std::isfinite(x) ? json(x) : json(nullptr); }

}  // namespace

std::string format_double(double x) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

void write_trace_csv(std::ostream& out, const OptimizerTrace& trace) {
  out << "iter,f,grad_l2,grad_gnorm,step_norm,spd,time_s\n";
  char time_buf[32];
  for (const IterationRecord& r : trace.records) {
    std::snprintf(time_buf, sizeof time_buf, "%.6f", r.time_s);
    out << r.iter << ',' << format_double(r.f) << ',' << format_double(r.grad_l2) << ','
        << format_double(r.grad_gnorm) << ',' << format_double(r.step_norm) << ','
        << (r.spd ? 1 : 0) << ',' << time_buf << '\n';
  }
}

void write_trace_csv(const std::filesystem::path& path, const OptimizerTrace& trace) {
  std::ofstream out = open_out(path);
  write_trace_csv(out, trace);
}

json trace_status_json(const OptimizerTrace& trace) {
  json j;
  j["method"] = trace.method;
  j["status"] = to_string(trace.status);
  j["message"] = trace.message;
  j["iterations"] = trace.iterations();
  j["f0"] = finite_or_null(trace.f0);
  j["grad_l2_0"] = finite_or_null(trace.grad_l2_0);
  j["final_grad_l2"] = finite_or_null(trace.final_grad_l2());
  j["start"] = trace.iterates.front();
  j["final_point"] = trace.final_point();
  j["all_spd"] = trace.all_spd();
  return j;
}

void write_iterates_csv(const std::filesystem::path& path, const OptimizerTrace& trace) {
  std::ofstream out = open_out(path);
  out << "iter";
  for (std::size_t i = 0; i < trace.iterates.front().size(); ++i) out << ",xi_" << i + 1;
  out << '\n';
  for (std::size_t k = 0; k < trace.iterates.size(); ++k) {
    out << k;
    for (double v : trace.iterates[k]) out << ',' << format_double(v);
    out << '\n';
  }
}

json to_json(const TargetSpec& spec) {
  json theta = json::object();
  for (std::size_t a = 0; a < spec.target.index.size(); ++a) {
    theta[spec.target.index.key(a)] = spec.target.theta[a];
  }
  json eta = json::object();
  for (std::size_t a = 0; a < spec.model_index.size(); ++a) {
    eta[spec.model_index.key(a)] = spec.eta_hat[a];
  }
  // Keys are emitted in index order so files diff cleanly.
  json keys = json::array();
  for (std::size_t a = 0; a < spec.target.index.size(); ++a) keys.push_back(spec.target.index.key(a));
  json model_keys = json::array();
  for (std::size_t a = 0; a < spec.model_index.size(); ++a) model_keys.push_back(spec.model_index.key(a));
  return json{{"n", spec.target.index.n_vars()},
              {"base_scale", spec.base_scale},
              {"seed", spec.seed},
              {"target_subsets", keys},
              {"theta", theta},
              {"model_subsets", model_keys},
              {"eta_hat", eta}};
}

TargetSpec target_from_json(const json& j) {
  try {
    TargetSpec spec;
    const std::size_t n = j.at("n").get<std::size_t>();
    spec.base_scale = j.value("base_scale", 1.0);
    spec.seed = j.value("seed", std::uint64_t{0});
    std::vector<std::uint32_t> masks;
    Vector theta;
    const json& th = j.at("theta");
    std::vector<std::string> keys;
    if (j.contains("target_subsets")) {
      keys = j.at("target_subsets").get<std::vector<std::string>>();
    } else {
      for (auto it = th.begin(); it != th.end(); ++it) keys.push_back(it.key());
    }
    for (const std::string& k : keys) {
      masks.push_back(SubsetIndex::parse_key(k, n));
      theta.push_back(th.at(k).get<double>());
    }
    spec.target = LogLinearModel{SubsetIndex(n, std::move(masks)), std::move(theta)};
    if (j.contains("model_subsets")) {
      std::vector<std::uint32_t> mm;
      for (const auto& k : j.at("model_subsets")) mm.push_back(SubsetIndex::parse_key(k, n));
      spec.model_index = SubsetIndex(n, std::move(mm));
    } else {
      spec.model_index = SubsetIndex::boltzmann(n);
    }
    spec.eta_hat = loglinear_moments(spec.target, spec.model_index);
    return spec;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed target: ") + e.what());
  } catch (const NumericError& e) {
    throw std::invalid_argument(std::string("malformed target: ") + e.what());
  }
}

json to_json(const BetaDataset& data) {
  json pts = json::array();
  for (std::size_t i = 0; i + 1 < data.points.size(); i += 2) {
    pts.push_back({data.points[i], data.points[i + 1]});
  }
  return json{{"weights", data.weights},
              {"shapes", data.shapes},
              {"seed", data.seed},
              {"points", pts}};
}

BetaDataset dataset_from_json(const json& j) {
  try {
    BetaDataset d;
    d.weights = j.at("weights").get<Vector>();
    d.shapes = j.value("shapes", Vector{});
    d.seed = j.value("seed", std::uint64_t{0});
    for (const auto& p : j.at("points")) {
      if (p.size() != 2) throw std::invalid_argument("points must be pairs");
      d.points.push_back(p[0].get<double>());
      d.points.push_back(p[1].get<double>());
    }
    return d;
  } catch (const json::exception& e) {
    throw std::invalid_argument(std::string("malformed dataset: ") + e.what());
  }
}

json read_json(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot read " + path.string());
  try {
    return json::parse(in);
  } catch (const json::exception& e) {
    throw std::invalid_argument(path.string() + ": " + e.what());
  }
}

void write_json(const std::filesystem::path& path, const json& j) {
  std::ofstream out = open_out(path);
  out << j.dump(2) << '\n';
}

}  // namespace dualnewton
