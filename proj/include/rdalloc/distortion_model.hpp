#pragma once

// Task distortion, weighted total distortion, and the exponential
// rate-distortion surface
//
//   D_t(R_1, ..., R_N) = gamma + sum_j alpha_j * 2^(-beta_j * R_j)
//
// Rates are in kbits per tensor; distortions are dimensionless fractions.

#include <cstddef>
#include <span>
#include <vector>

namespace rdalloc {

struct TaskPerformance {
  std::size_t task_id = 1;  // 1-based
  double baseline = 0.0;    // uncompressed performance
  double measured = 0.0;    // performance with compressed tensors
};

/// Strictly positive task weights.
class WeightVector {
 public:
  explicit WeightVector(std::vector<double> weights);
  static WeightVector uniform(std::size_t tasks);

  std::span<const double> values() const { return weights_; }
  std::size_t size() const { return weights_.size(); }
  double operator[](std::size_t i) const { return weights_[i]; }

 private:
  std::vector<double> weights_;
};

/// Per-stream rates, all nonnegative.
class RateVector {
 public:
  explicit RateVector(std::vector<double> rates);

  std::span<const double> values() const { return rates_; }
  std::size_t size() const { return rates_.size(); }
  double operator[](std::size_t i) const { return rates_[i]; }

  friend bool operator==(const RateVector&, const RateVector&) = default;

 private:
  std::vector<double> rates_;
};

/// Parameters of the exponential surface. alphas and betas are strictly
/// positive and of equal length N >= 1; gamma is unconstrained.
class SurfaceParams {
 public:
  SurfaceParams(double gamma, std::vector<double> alphas,
                std::vector<double> betas);

  double gamma() const { return gamma_; }
  std::span<const double> alphas() const { return alphas_; }
  std::span<const double> betas() const { return betas_; }
  double alpha(std::size_t j) const { return alphas_[j]; }
  double beta(std::size_t j) const { return betas_[j]; }
  std::size_t streams() const { return alphas_.size(); }

  friend bool operator==(const SurfaceParams&, const SurfaceParams&) = default;

 private:
  double gamma_;
  std::vector<double> alphas_;
  std::vector<double> betas_;
};

/// (baseline - measured) / baseline. Throws DomainError on a zero baseline.
double task_distortion(const TaskPerformance& perf);

/// sum_i w_i * D_i.
double total_distortion(std::span<const double> distortions,
                        const WeightVector& weights);

double eval_surface(const SurfaceParams& params, const RateVector& rates);

/// Same formula without the nonnegativity check on the rates. Used for
/// diagnostics on unclipped closed-form allocations.
double eval_surface_unchecked(const SurfaceParams& params,
                              std::span<const double> rates);

/// d D_t / d R_j = -alpha_j * beta_j * ln2 * 2^(-beta_j * R_j).
std::vector<double> surface_gradient(const SurfaceParams& params,
                                     const RateVector& rates);

}  // namespace rdalloc
