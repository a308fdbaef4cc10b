#include "rdalloc/allocator.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <string>

#include "rdalloc/errors.hpp"

namespace rdalloc {

namespace {

void check_budget(double budget) {
  if (!std::isfinite(budget)) throw DomainError("budget must be finite");
}

void check_nonnegative_budget(double budget) {
  check_budget(budget);
  if (budget < 0.0) throw DomainError("budget must be nonnegative");
}

struct ActiveSolution {
  double log_slope;  // log2 of the common alpha_j * beta_j * 2^(-beta_j R_j)
};

// Closed-form rates over the streams flagged active; inactive streams get 0.
ActiveSolution solve_active(const SurfaceParams& params, double budget,
                            const std::vector<bool>& active,
                            std::vector<double>& rates) {
  double inv_beta_sum = 0.0;
  double weighted_log_sum = 0.0;
  for (std::size_t j = 0; j < params.streams(); ++j) {
    if (!active[j]) continue;
    const double inv_beta = 1.0 / params.beta(j);
    inv_beta_sum += inv_beta;
    weighted_log_sum += inv_beta * std::log2(params.alpha(j) * params.beta(j));
  }
  const double log_slope = (weighted_log_sum - budget) / inv_beta_sum;
  for (std::size_t j = 0; j < params.streams(); ++j) {
    rates[j] = active[j]
                   ? (std::log2(params.alpha(j) * params.beta(j)) - log_slope) /
                         params.beta(j)
                   : 0.0;
  }
  return {log_slope};
}

double multiplier_from(double log_slope) {
  return std::numbers::ln2 * std::exp2(log_slope);
}

}  // namespace

std::string_view method_label(Method m) {
  switch (m) {
    case Method::closed_form:
      return "closed_form";
    case Method::clipped:
      return "clipped";
    case Method::equal:
      return "equal";
    case Method::prop_elements:
      return "prop_elements";
    case Method::prop_variance:
      return "prop_variance";
    case Method::grid_search:
      return "grid_search";
  }
  return "unknown";
}

void StreamStats::validate(std::size_t streams) const {
  if (element_counts.size() != streams || variances.size() != streams) {
    throw DomainError("stream statistics must have one entry per stream (" +
                      std::to_string(streams) + ")");
  }
  for (double c : element_counts) {
    if (!(c >= 1.0) || !std::isfinite(c)) {
      throw DomainError("element counts must be at least 1");
    }
  }
  bool any_positive = false;
  for (double v : variances) {
    if (!(v >= 0.0) || !std::isfinite(v)) {
      throw DomainError("variances must be finite and nonnegative");
    }
    any_positive = any_positive || v > 0.0;
  }
  if (!any_positive) throw DomainError("variances are all zero");
}

Allocation allocate_closed_form(const SurfaceParams& params, double budget) {
  check_budget(budget);
  Allocation out;
  out.method = Method::closed_form;
  out.budget = budget;
  out.rates.assign(params.streams(), 0.0);
  const auto sol = solve_active(
      params, budget, std::vector<bool>(params.streams(), true), out.rates);
  out.multiplier = multiplier_from(sol.log_slope);
  out.predicted_distortion = eval_surface_unchecked(params, out.rates);
  return out;
}

Allocation allocate_clipped(const SurfaceParams& params, double budget) {
  check_nonnegative_budget(budget);
  const std::size_t n = params.streams();
  Allocation out;
  out.method = Method::clipped;
  out.budget = budget;
  out.rates.assign(n, 0.0);

  if (budget == 0.0) {
    // Only feasible point. Any multiplier at or above the largest slope at 0
    // satisfies the KKT conditions; report the smallest such value.
    double slope = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      slope = std::max(slope, params.alpha(j) * params.beta(j) * std::numbers::ln2);
    }
    out.multiplier = slope;
    out.predicted_distortion = eval_surface(params, RateVector(out.rates));
    return out;
  }

  std::vector<bool> active(n, true);
  double log_slope = 0.0;
  for (std::size_t pass = 0; pass < n; ++pass) {
    log_slope = solve_active(params, budget, active, out.rates).log_slope;
    bool clipped_any = false;
    for (std::size_t j = 0; j < n; ++j) {
      if (active[j] && out.rates[j] < 0.0) {
        active[j] = false;
        out.rates[j] = 0.0;
        clipped_any = true;
      }
    }
    if (!clipped_any) break;
  }
  out.multiplier = multiplier_from(log_slope);
  out.predicted_distortion = eval_surface(params, RateVector(out.rates));
  return out;
}

Allocation allocate_equal(std::size_t streams, double budget) {
  check_nonnegative_budget(budget);
  if (streams == 0) throw DomainError("need at least one stream");
  Allocation out;
  out.method = Method::equal;
  out.budget = budget;
  out.rates.assign(streams, budget / static_cast<double>(streams));
  return out;
}

Allocation allocate_proportional(std::span<const double> shares, double budget,
                                 Method label) {
  check_nonnegative_budget(budget);
  if (shares.empty()) throw DomainError("need at least one share");
  double total = 0.0;
  for (double s : shares) {
    if (!(s >= 0.0) || !std::isfinite(s)) {
      throw DomainError("shares must be finite and nonnegative");
    }
    total += s;
  }
  if (total == 0.0) throw DomainError("shares are all zero");
  Allocation out;
  out.method = label;
  out.budget = budget;
  out.rates.reserve(shares.size());
  for (double s : shares) out.rates.push_back(budget * (s / total));
  return out;
}

std::vector<MethodResult> compare_methods(const SurfaceParams& params,
                                          const StreamStats& stats,
                                          double budget) {
  const std::size_t n = params.streams();
  stats.validate(n);
  std::vector<Allocation> allocations;
  allocations.push_back(allocate_clipped(params, budget));
  allocations.push_back(allocate_equal(n, budget));
  allocations.push_back(
      allocate_proportional(stats.element_counts, budget, Method::prop_elements));
  allocations.push_back(
      allocate_proportional(stats.variances, budget, Method::prop_variance));

  std::vector<MethodResult> table;
  for (auto& a : allocations) {
    a.predicted_distortion = eval_surface(params, RateVector(a.rates));
    const Method m = a.method;
    const double d = a.predicted_distortion;
    table.push_back({m, std::move(a), d});
  }
  return table;
}

}  // namespace rdalloc
