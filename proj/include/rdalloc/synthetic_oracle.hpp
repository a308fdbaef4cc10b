#pragma once

// Synthetic stand-in for measuring a multi-task network on decoded tensors,
// and a brute-force allocation oracle.

#include <cstddef>
#include <cstdint>
#include <random>
#include <span>
#include <vector>

#include "rdalloc/allocator.hpp"
#include "rdalloc/distortion_model.hpp"
#include "rdalloc/surface_fit.hpp"

namespace rdalloc {

/// D_i(R) = offset + sum_j coeffs[j] * 2^(-decays[j] * R_j).
struct SyntheticTaskModel {
  std::size_t task_id = 1;
  double baseline = 1.0;
  double offset = 0.0;
  std::vector<double> coeffs;  // >= 0
  std::vector<double> decays;  // > 0, 1/kbit

  double distortion(std::span<const double> rates) const;
  void validate(std::size_t streams) const;
};

struct SamplingPlan {
  std::vector<RateVector> rate_grid;
  double noise_sigma = 0.0;  // relative to each task's baseline
  std::uint64_t seed = 0;

  /// points_per_axis^streams tuples, uniform over [lo, hi] on every axis, with
  /// the first stream varying slowest.
  static std::vector<RateVector> uniform_grid(std::size_t streams,
                                              std::size_t points_per_axis,
                                              double lo, double hi);
};

/// Standard normal deviates from a seeded std::mt19937_64.
///
/// Seed contract: the engine is constructed as std::mt19937_64(seed). Each
/// deviate consumes two consecutive 64-bit outputs x1, x2, forms
/// u1 = ((x1 >> 11) + 1) * 2^-53 in (0, 1] and u2 = (x2 >> 11) * 2^-53 in
/// [0, 1), and returns sqrt(-2 ln u1) * cos(2 pi u2) (Box-Muller, cosine
/// branch only). std::normal_distribution is avoided because its algorithm is
/// implementation-defined.
class GaussianSource {
 public:
  explicit GaussianSource(std::uint64_t seed) : engine_(seed) {}
  double next();

 private:
  std::mt19937_64 engine_;
};

struct PerformancePoint {
  RateVector rates;
  std::vector<TaskPerformance> tasks;
};

using PerformanceTable = std::vector<PerformancePoint>;

/// measured = baseline * (1 - D_i(R)) + noise_sigma * baseline * z, with one
/// deviate z drawn per (grid point, task) in grid-major, task-minor order.
PerformanceTable generate_task_performances(
    std::span<const SyntheticTaskModel> models, const SamplingPlan& plan);

/// Task distortions per point, then the weighted total. Tasks must appear
/// with ids 1..M (M = weight count) at every point.
std::vector<RdSample> build_rd_samples(const PerformanceTable& table,
                                       const WeightVector& weights);

/// Exhaustive search over the simplex lattice R_j = k_j * budget / K,
/// sum_j k_j = K, where K = ceil(budget / step) makes the spacing at most
/// `step`. Ties resolve to the lexicographically smallest lattice point.
/// N <= 3.
Allocation grid_search_allocation(const SurfaceParams& params, double budget,
                                  double step);

/// Three tasks over two streams. Decays are shared by all tasks, so the
/// unit-weight total is exactly gamma = 0.008,
/// alpha = (0.7245, 1.8309), beta = (7.07e-4, 2.11e-2).
std::vector<SyntheticTaskModel> default_task_models();

/// 10 x 10 grid over [50, 3000] kbits.
SamplingPlan default_sampling_plan(std::uint64_t seed, double noise_sigma);

/// Element counts and variances of the two default streams.
StreamStats default_stream_stats();

}  // namespace rdalloc
