#include "dualnewton/kernels.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

#include <boost/math/special_functions/digamma.hpp>
#include <boost/math/special_functions/gamma.hpp>
#include <boost/math/special_functions/trigamma.hpp>

namespace dualnewton::kernels {
namespace {

// A block of `width` compensated accumulators.
class SumBlock {
 public:
  explicit SumBlock(std::size_t width) : sums_(width) {}
  void add(std::size_t slot, double v) { sums_[slot].add(v); }
  std::size_t width() const { return sums_.size(); }
  double value(std::size_t slot) const { return sums_[slot].value(); }

 private:
  std::vector<CompensatedSum> sums_;
};

// Reduces body(block, index) over [0, count). Serial: one block, natural
// order. Parallel: one block per fixed-size chunk, chunk partials combined in
// chunk order.
template <class Body>
std::vector<double> chunked_reduce(std::size_t count, std::size_t width, Exec exec, Body&& body) {
  std::vector<double> out(width, 0.0);
  if (exec == Exec::Serial) {
    SumBlock block(width);
    for (std::size_t i = 0; i < count; ++i) body(block, i);
    for (std::size_t w = 0; w < width; ++w) out[w] = block.value(w);
    return out;
  }
  const std::size_t n_chunks = (count + kChunk - 1) / kChunk;
  std::vector<SumBlock> partials(n_chunks, SumBlock(width));
  const auto chunks = static_cast<std::int64_t>(n_chunks);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < chunks; ++c) {
    const std::size_t begin = static_cast<std::size_t>(c) * kChunk;
    const std::size_t end = std::min(count, begin + kChunk);
    SumBlock& block = partials[static_cast<std::size_t>(c)];
    for (std::size_t i = begin; i < end; ++i) body(block, i);
  }
  for (std::size_t w = 0; w < width; ++w) {
    CompensatedSum s;
    for (const SumBlock& block : partials) s += block.value(w);
    out[w] = s.value();
  }
  return out;
}

template <class Body>
void parallel_for(std::size_t count, Exec exec, Body&& body) {
  if (exec == Exec::Serial) {
    for (std::size_t i = 0; i < count; ++i) body(i);
    return;
  }
  const auto n = static_cast<std::int64_t>(count);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) body(static_cast<std::size_t>(i));
}

struct Distribution {
  double log_partition = 0.0;
  std::vector<double> log_weight;  // unnormalized
  std::vector<double> prob;
};

Distribution enumerate(std::size_t n_vars, std::span<const std::uint32_t> masks,
                       std::span<const double> theta, Exec exec) {
  if (masks.size() != theta.size()) {
    throw NumericError(ErrorKind::DimensionMismatch, "log-linear parameters vs index");
  }
  if (n_vars > 20) {
    throw NumericError(ErrorKind::DimensionMismatch, "exact enumeration limited to n <= 20");
  }
  const std::size_t states = std::size_t{1} << n_vars;
  Distribution d;
  d.log_weight.resize(states);
  parallel_for(states, exec, [&](std::size_t x) {
    CompensatedSum s;
    for (std::size_t a = 0; a < masks.size(); ++a) {
      if ((x & masks[a]) == masks[a]) s += theta[a];
    }
    d.log_weight[x] = s.value();
  });
  const double top = *std::max_element(d.log_weight.begin(), d.log_weight.end());
  if (!std::isfinite(top)) {
    throw NumericError(ErrorKind::NonFiniteValue, "log-linear log weights");
  }
  const std::vector<double> z = chunked_reduce(states, 1, exec, [&](SumBlock& b, std::size_t x) {
    b.add(0, std::exp(d.log_weight[x] - top));
  });
  d.log_partition = top + std::log(z[0]);
  d.prob.resize(states);
  parallel_for(states, exec,
               [&](std::size_t x) { d.prob[x] = std::exp(d.log_weight[x] - d.log_partition); });
  return d;
}

}  // namespace

LogLinearStats loglinear_stats(std::size_t n_vars, std::span<const std::uint32_t> model_masks,
                               std::span<const double> theta,
                               std::span<const std::uint32_t> feature_masks, MomentOrder order,
                               Exec exec) {
  const Distribution dist = enumerate(n_vars, model_masks, theta, exec);
  const std::size_t states = dist.prob.size();
  const std::size_t m = feature_masks.size();
  const auto feature = [&](std::size_t x, std::size_t a) {
    return (x & feature_masks[a]) == feature_masks[a] ? 1.0 : 0.0;
  };

  LogLinearStats stats;
  stats.log_partition = dist.log_partition;
  stats.mean = chunked_reduce(states, m, exec, [&](SumBlock& b, std::size_t x) {
    for (std::size_t a = 0; a < m; ++a) {
      if (feature(x, a) != 0.0) b.add(a, dist.prob[x]);
    }
  });
  if (order == MomentOrder::Mean) return stats;

  // Upper-triangular pair and triple slots.
  std::vector<std::size_t> pair_slot(m * m), triple_slot;
  std::size_t pairs = 0;
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = i; j < m; ++j) pair_slot[i * m + j] = pair_slot[j * m + i] = pairs++;
  std::size_t triples = 0;
  const bool want_third = order == MomentOrder::ThirdCentral;
  if (want_third) {
    triple_slot.assign(m * m * m, 0);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = i; j < m; ++j)
        for (std::size_t k = j; k < m; ++k) {
          const std::size_t s = pairs + triples++;
          for (auto [p, q, r] : {std::array{i, j, k}, std::array{i, k, j}, std::array{j, i, k},
                                 std::array{j, k, i}, std::array{k, i, j}, std::array{k, j, i}})
            triple_slot[(p * m + q) * m + r] = s;
        }
  }

  const std::vector<double> sums =
      chunked_reduce(states, pairs + triples, exec, [&](SumBlock& b, std::size_t x) {
        thread_local std::vector<double> dev;
        dev.resize(m);
        for (std::size_t a = 0; a < m; ++a) dev[a] = feature(x, a) - stats.mean[a];
        const double p = dist.prob[x];
        std::size_t slot = 0;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = i; j < m; ++j) b.add(slot++, p * dev[i] * dev[j]);
        if (!want_third) return;
        for (std::size_t i = 0; i < m; ++i)
          for (std::size_t j = i; j < m; ++j) {
            const double pij = p * dev[i] * dev[j];
            for (std::size_t k = j; k < m; ++k) b.add(slot++, pij * dev[k]);
          }
      });

  stats.covariance = Matrix(m, m);
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < m; ++j) stats.covariance(i, j) = sums[pair_slot[i * m + j]];
  if (want_third) {
    stats.third = ChristoffelTensor(m);
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t j = 0; j < m; ++j)
        for (std::size_t k = 0; k < m; ++k)
          stats.third(i, j, k) = sums[triple_slot[(i * m + j) * m + k]];
  }
  return stats;
}

double loglinear_negative_entropy(std::size_t n_vars, std::span<const std::uint32_t> model_masks,
                                  std::span<const double> theta, Exec exec) {
  const Distribution dist = enumerate(n_vars, model_masks, theta, exec);
  const std::vector<double> s =
      chunked_reduce(dist.prob.size(), 1, exec, [&](SumBlock& b, std::size_t x) {
        b.add(0, dist.prob[x] * (dist.log_weight[x] - dist.log_partition));
      });
  return s[0];
}

namespace {

// Per-component constants of log Beta(x1|a,b) + log Beta(x2|a,b).
struct Component {
  double log_weight;
  double a_minus_1, b_minus_1;
  double log_norm;          // 2 log B(a, b)
  double dpsi_a, dpsi_b;    // 2 (psi(a) - psi(a+b)), 2 (psi(b) - psi(a+b))
  double hess_aa, hess_ab, hess_bb;
};

std::vector<Component> prepare(const BetaMixtureParams& params) {
  const std::size_t k_count = params.weights.size();
  if (params.shapes.size() != 2 * k_count) {
    throw NumericError(ErrorKind::DimensionMismatch, "Beta mixture shapes vs weights");
  }
  std::vector<Component> comps(k_count);
  for (std::size_t k = 0; k < k_count; ++k) {
    const double a = params.shapes[2 * k];
    const double b = params.shapes[2 * k + 1];
    if (!(a > 0.0) || !(b > 0.0) || !std::isfinite(a) || !std::isfinite(b)) {
      throw NumericError(ErrorKind::DomainViolation, "Beta shapes must be positive");
    }
    const double w = params.weights[k];
    if (!(w > 0.0)) {
      throw NumericError(ErrorKind::DomainViolation, "mixture weights must be positive");
    }
    namespace bm = boost::math;
    const double psi_ab = bm::digamma(a + b);
    const double tri_ab = bm::trigamma(a + b);
    comps[k] = Component{
        std::log(w),
        a - 1.0,
        b - 1.0,
        2.0 * (bm::lgamma(a) + bm::lgamma(b) - bm::lgamma(a + b)),
        2.0 * (bm::digamma(a) - psi_ab),
        2.0 * (bm::digamma(b) - psi_ab),
        -2.0 * (bm::trigamma(a) - tri_ab),
        2.0 * tri_ab,
        -2.0 * (bm::trigamma(b) - tri_ab),
    };
  }
  return comps;
}

// Log mixture density, score and (optionally) second derivatives of the log
// density at one point. Returns log p.
// log_c1 and log_c2 are log(1 - x1) and log(1 - x2), passed in so callers
// can supply them from accurately stored complements.
double point_derivatives(const std::vector<Component>& comps, double x1, double x2,
                         double log_c1, double log_c2, std::span<double> score,
                         std::span<double> hessian) {
  const std::size_t k_count = comps.size();
  const std::size_t n = 2 * k_count;
  const double l1 = std::log(x1) + std::log(x2);
  const double l2 = log_c1 + log_c2;
  thread_local std::vector<double> log_terms, resp, u;
  log_terms.resize(k_count);
  resp.resize(k_count);
  u.resize(n);
  double top = -std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < k_count; ++k) {
    const Component& c = comps[k];
    log_terms[k] = c.log_weight + c.a_minus_1 * l1 + c.b_minus_1 * l2 - c.log_norm;
    top = std::max(top, log_terms[k]);
    u[2 * k] = l1 - c.dpsi_a;
    u[2 * k + 1] = l2 - c.dpsi_b;
  }
  double z = 0.0;
  for (std::size_t k = 0; k < k_count; ++k) z += std::exp(log_terms[k] - top);
  const double log_p = top + std::log(z);
  for (std::size_t k = 0; k < k_count; ++k) resp[k] = std::exp(log_terms[k] - log_p);
  for (std::size_t i = 0; i < n; ++i) score[i] = resp[i / 2] * u[i];
  if (hessian.empty()) return log_p;
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < n; ++j) {
      const std::size_t ki = i / 2, kj = j / 2;
      double v = -resp[ki] * resp[kj] * u[i] * u[j];
      if (ki == kj) {
        const Component& c = comps[ki];
        const double h = (i % 2 == 0) ? (j % 2 == 0 ? c.hess_aa : c.hess_ab)
                                      : (j % 2 == 0 ? c.hess_ab : c.hess_bb);
        v += resp[ki] * (h + u[i] * u[j]);
      }
      hessian[i * n + j] = v;
    }
  }
  return log_p;
}

}  // namespace

BetaMixtureMoments beta_mixture_moments(const BetaMixtureParams& params,
                                        std::span<const double> nodes,
                                        std::span<const double> weights, MomentOrder order,
                                        Exec exec, std::span<const double> complements) {
  if (nodes.size() != weights.size() || nodes.empty() ||
      (!complements.empty() && complements.size() != nodes.size())) {
    throw NumericError(ErrorKind::DimensionMismatch, "quadrature nodes vs weights");
  }
  std::vector<double> log_comp(nodes.size());
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    log_comp[i] = complements.empty() ? std::log1p(-nodes[i]) : std::log(complements[i]);
  }
  const std::vector<Component> comps = prepare(params);
  const std::size_t n = 2 * comps.size();
  const std::size_t q = nodes.size();
  const bool want_third = order == MomentOrder::ThirdCentral;
  const std::size_t width = 1 + n * n + (want_third ? 2 * n * n * n : 0);
  const std::vector<double> sums =
      chunked_reduce(q * q, width, exec, [&](SumBlock& b, std::size_t idx) {
        thread_local std::vector<double> score, hess;
        score.resize(n);
        hess.resize(n * n);
        const std::size_t r = idx / q, c = idx % q;
        const double log_p = point_derivatives(comps, nodes[r], nodes[c], log_comp[r],
                                               log_comp[c], score,
                                               want_third ? std::span<double>(hess)
                                                          : std::span<double>());
        const double mass = weights[r] * weights[c] * std::exp(log_p);
        if (mass == 0.0) return;
        b.add(0, mass);
        std::size_t slot = 1;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) b.add(slot++, mass * score[i] * score[j]);
        if (!want_third) return;
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double mh = mass * hess[i * n + j];
            for (std::size_t k = 0; k < n; ++k) b.add(slot++, mh * score[k]);
          }
        for (std::size_t i = 0; i < n; ++i)
          for (std::size_t j = 0; j < n; ++j) {
            const double ms = mass * score[i] * score[j];
            for (std::size_t k = 0; k < n; ++k) b.add(slot++, ms * score[k]);
          }
      });
  BetaMixtureMoments out;
  out.mass = sums[0];
  if (!(out.mass > 0.0)) {
    throw NumericError(ErrorKind::QuadratureUnderflow, "mixture density underflows at every node");
  }
  out.metric = Matrix(n, n);
  std::size_t slot = 1;
  for (std::size_t i = 0; i < n; ++i)
    for (std::size_t j = 0; j < n; ++j) out.metric(i, j) = sums[slot++];
  if (!want_third) return out;
  out.second = ChristoffelTensor(n);
  out.third = ChristoffelTensor(n);
  for (double& v : out.second.data()) v = sums[slot++];
  for (double& v : out.third.data()) v = sums[slot++];
  return out;
}

LikelihoodValue beta_mixture_nll(const BetaMixtureParams& params, std::span<const double> points,
                                 Exec exec) {
  if (points.size() % 2 != 0) {
    throw NumericError(ErrorKind::DimensionMismatch, "points must be (x1, x2) pairs");
  }
  const std::vector<Component> comps = prepare(params);
  const std::size_t n = 2 * comps.size();
  const std::vector<double> sums =
      chunked_reduce(points.size() / 2, 1 + n, exec, [&](SumBlock& b, std::size_t i) {
        thread_local std::vector<double> score;
        score.resize(n);
        const double log_p =
            point_derivatives(comps, points[2 * i], points[2 * i + 1],
                              std::log1p(-points[2 * i]), std::log1p(-points[2 * i + 1]), score,
                              {});
        b.add(0, -log_p);
        for (std::size_t j = 0; j < n; ++j) b.add(1 + j, -score[j]);
      });
  LikelihoodValue out;
  out.nll = sums[0];
  out.gradient.assign(sums.begin() + 1, sums.end());
  if (!std::isfinite(out.nll) || !all_finite(out.gradient)) {
    throw NumericError(ErrorKind::NonFiniteValue, "Beta mixture likelihood");
  }
  return out;
}

}  // namespace dualnewton::kernels
