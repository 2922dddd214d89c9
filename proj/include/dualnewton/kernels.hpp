#pragma once

// Data-parallel inner loops: exact 2^n enumeration for log-linear models,
// tensor-product quadrature for the Beta mixture geometry, and the
// Beta-mixture likelihood over a dataset.
//
// Each kernel has two execution paths. `Exec::Serial` is the plain reference
// loop kept for testing. `Exec::Parallel` splits the index range into chunks
// of fixed size kChunk, reduces each chunk with compensated sums under
// OpenMP, then combines the chunk partials serially in chunk order. The
// chunking never depends on the thread count, so parallel results are
// bit-identical for any OMP_NUM_THREADS.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "dualnewton/geometry.hpp"
#include "dualnewton/linalg.hpp"

namespace dualnewton::kernels {

enum class Exec { Serial, Parallel };

inline constexpr std::size_t kChunk = 256;

/// Highest moment order a log-linear pass computes.
enum class MomentOrder { Mean = 1, Covariance = 2, ThirdCentral = 3 };

struct LogLinearStats {
  double log_partition = 0.0;  // psi(theta)
  Vector mean;                 // eta over the feature index
  Matrix covariance;           // Fisher metric in theta coordinates
  ChristoffelTensor third;     // third central moment tensor T_ijk
};

/// Moments of features F_A(x) = prod_{i in A} x_i under
/// p(x) ∝ exp(sum_A theta_A F_A(x)). `model_masks` are the subsets carrying
/// theta; `feature_masks` are the subsets whose moments are returned.
/// States x in {0,1}^n are enumerated as bitmasks 0 .. 2^n - 1.
LogLinearStats loglinear_stats(std::size_t n_vars, std::span<const std::uint32_t> model_masks,
                               std::span<const double> theta,
                               std::span<const std::uint32_t> feature_masks,
                               MomentOrder order, Exec exec = Exec::Parallel);

/// Negative Shannon entropy sum_x p(x) log p(x) of a log-linear distribution.
double loglinear_negative_entropy(std::size_t n_vars, std::span<const std::uint32_t> model_masks,
                                  std::span<const double> theta, Exec exec = Exec::Parallel);

/// Parameters of K two-dimensional product-Beta components with fixed weights.
/// shapes = (a_1, b_1, ..., a_K, b_K).
struct BetaMixtureParams {
  std::span<const double> weights;
  std::span<const double> shapes;
};

/// Expectations under the mixture density, computed on quadrature nodes:
///   metric(i, j)    = E[d_i l d_j l]
///   second(i, j, k) = E[d_i d_j l d_k l]
///   third(i, j, k)  = E[d_i l d_j l d_k l]
/// `mass` is the quadrature integral of the density itself.
struct BetaMixtureMoments {
  Matrix metric;
  ChristoffelTensor second;
  ChristoffelTensor third;
  double mass = 0.0;
};

/// Tensor-product rule over (0,1)^2 built from 1-D `nodes`/`weights`.
/// `complements` optionally holds 1 - nodes computed without cancellation;
/// when empty it is derived from `nodes`.
/// With MomentOrder::Covariance only `metric` and `mass` are filled.
BetaMixtureMoments beta_mixture_moments(const BetaMixtureParams& params,
                                        std::span<const double> nodes,
                                        std::span<const double> weights,
                                        MomentOrder order = MomentOrder::ThirdCentral,
                                        Exec exec = Exec::Parallel,
                                        std::span<const double> complements = {});

struct LikelihoodValue {
  double nll = 0.0;
  Vector gradient;
};

/// Negative log-likelihood and its gradient over points stored as
/// (x_11, x_12, x_21, x_22, ...).
LikelihoodValue beta_mixture_nll(const BetaMixtureParams& params,
                                 std::span<const double> points, Exec exec = Exec::Parallel);

}  // namespace dualnewton::kernels
