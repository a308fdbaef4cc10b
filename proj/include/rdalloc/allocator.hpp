#pragma once

// Bit allocation among N feature streams under a total-rate budget, on a
// fitted exponential surface, plus the baseline allocators it is compared to.

#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

#include "rdalloc/distortion_model.hpp"

namespace rdalloc {

enum class Method {
  closed_form,    // raw Lagrangian solution, rates may be negative
  clipped,        // closed form with active-set clipping at zero (proposed)
  equal,          // Method 1
  prop_elements,  // Method 2
  prop_variance,  // Method 3
  grid_search,    // brute-force oracle
};

std::string_view method_label(Method m);

struct Allocation {
  std::vector<double> rates;  // kbits per stream
  double budget = 0.0;
  Method method = Method::clipped;
  /// NaN for the baselines until scored against a surface.
  double predicted_distortion = std::numeric_limits<double>::quiet_NaN();
  /// Lagrange multiplier (common marginal slope magnitude); analytic methods only.
  std::optional<double> multiplier;
};

/// Tensor statistics used by the proportional baselines.
struct StreamStats {
  std::vector<double> element_counts;
  std::vector<double> variances;

  void validate(std::size_t streams) const;
};

Allocation allocate_closed_form(const SurfaceParams& params, double budget);

/// Closed-form solution re-solved over the streams that remain positive until
/// every rate is nonnegative. Each pass pins the newly negative streams at 0
/// and gives the whole budget to the rest, so it takes at most N passes.
Allocation allocate_clipped(const SurfaceParams& params, double budget);

Allocation allocate_equal(std::size_t streams, double budget);

/// R_j = budget * s_j / sum_k s_k.
Allocation allocate_proportional(std::span<const double> shares, double budget,
                                 Method label = Method::prop_elements);

struct MethodResult {
  Method method;
  Allocation allocation;
  double predicted_distortion;
};

/// Proposed (clipped) allocation and the three baselines, each scored on the
/// surface. The proposed row is first.
std::vector<MethodResult> compare_methods(const SurfaceParams& params,
                                          const StreamStats& stats,
                                          double budget);

}  // namespace rdalloc
