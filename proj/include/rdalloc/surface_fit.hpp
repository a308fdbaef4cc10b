#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "rdalloc/distortion_model.hpp"

namespace rdalloc {

/// One measured point of the rate-distortion surface.
struct RdSample {
  RateVector rates;
  double total_distortion;
};

struct FitOptions {
  double cost_tolerance = 1e-12;      // relative change of the cost
  double gradient_tolerance = 1e-10;  // inf-norm of the projected gradient
  std::size_t max_iterations = 500;
  double alpha_min = 1e-12;
  double beta_min = 1e-12;
};

struct FitReport {
  SurfaceParams params;
  /// Empty when R^2 is undefined (flat data that the surface cannot match).
  std::optional<double> r_squared;
  double residual_mean = 0.0;
  double residual_max_abs = 0.0;
  /// 0.5 * sum of squared residuals at params.
  double cost = 0.0;
  /// Inf-norm of the bound-projected gradient of the cost at params.
  double projected_gradient = 0.0;
  std::size_t iterations = 0;
  std::size_t samples = 0;
  bool converged = false;
};

struct ResidualStats {
  double mean = 0.0;
  double max_abs = 0.0;
};

/// Bounded nonlinear least-squares fit of the exponential surface:
/// alpha_j >= alpha_min, beta_j >= beta_min, gamma free.
///
/// Throws TooFewSamplesError with fewer than 2N+1 samples and
/// DegenerateDesignError when a rate coordinate never varies. Hitting the
/// iteration cap is not an error: the report carries converged = false and
/// the best parameters seen.
FitReport fit_surface(std::span<const RdSample> samples,
                      const FitOptions& options = {});

/// 1 - SS_res / SS_tot. For SS_tot == 0 it is 1 when SS_res == 0 and
/// UndefinedValueError otherwise.
double r_squared(std::span<const RdSample> samples, const SurfaceParams& params);

/// Mean and max-abs of (D^k - fitted^k).
ResidualStats residual_stats(std::span<const RdSample> samples,
                             const SurfaceParams& params);

/// Gradient of 0.5 * sum_k (fitted^k - D^k)^2 with respect to
/// (gamma, alpha_1..N, beta_1..N), zeroed where a lower bound is active and
/// the gradient points out of the feasible box.
std::vector<double> projected_cost_gradient(std::span<const RdSample> samples,
                                            const SurfaceParams& params,
                                            const FitOptions& options = {});

}  // namespace rdalloc
