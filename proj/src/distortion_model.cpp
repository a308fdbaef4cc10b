#include "rdalloc/distortion_model.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <utility>

#include "rdalloc/errors.hpp"

namespace rdalloc {

namespace {

void check_streams(const SurfaceParams& params, std::size_t n) {
  if (n != params.streams()) {
    throw DomainError("rate vector has " + std::to_string(n) +
                      " entries but the surface has " +
                      std::to_string(params.streams()) + " streams");
  }
}

}  // namespace

WeightVector::WeightVector(std::vector<double> weights)
    : weights_(std::move(weights)) {
  if (weights_.empty()) throw DomainError("weight vector is empty");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    if (!(weights_[i] > 0.0) || !std::isfinite(weights_[i])) {
      throw DomainError("weight w_" + std::to_string(i + 1) +
                        " must be finite and strictly positive");
    }
  }
}

WeightVector WeightVector::uniform(std::size_t tasks) {
  return WeightVector(std::vector<double>(tasks, 1.0));
}

RateVector::RateVector(std::vector<double> rates) : rates_(std::move(rates)) {
  for (std::size_t j = 0; j < rates_.size(); ++j) {
    if (!(rates_[j] >= 0.0)) {
      throw DomainError("rate R_" + std::to_string(j + 1) +
                        " must be nonnegative");
    }
  }
}

SurfaceParams::SurfaceParams(double gamma, std::vector<double> alphas,
                             std::vector<double> betas)
    : gamma_(gamma), alphas_(std::move(alphas)), betas_(std::move(betas)) {
  if (alphas_.empty()) throw DomainError("surface needs at least one stream");
  if (alphas_.size() != betas_.size()) {
    throw DomainError("alpha and beta lists differ in length");
  }
  if (!std::isfinite(gamma_)) throw DomainError("gamma must be finite");
  for (std::size_t j = 0; j < alphas_.size(); ++j) {
    if (!(alphas_[j] > 0.0) || !std::isfinite(alphas_[j])) {
      throw DomainError("alpha_" + std::to_string(j + 1) +
                        " must be finite and strictly positive");
    }
    if (!(betas_[j] > 0.0) || !std::isfinite(betas_[j])) {
      throw DomainError("beta_" + std::to_string(j + 1) +
                        " must be finite and strictly positive");
    }
  }
}

double task_distortion(const TaskPerformance& perf) {
  if (perf.baseline == 0.0) {
    throw DomainError("task " + std::to_string(perf.task_id) +
                      " has a zero baseline performance");
  }
  return (perf.baseline - perf.measured) / perf.baseline;
}

double total_distortion(std::span<const double> distortions,
                        const WeightVector& weights) {
  if (distortions.size() != weights.size()) {
    throw DomainError("got " + std::to_string(distortions.size()) +
                      " task distortions for " +
                      std::to_string(weights.size()) + " weights");
  }
  double total = 0.0;
  for (std::size_t i = 0; i < distortions.size(); ++i) {
    total += weights[i] * distortions[i];
  }
  return total;
}

double eval_surface(const SurfaceParams& params, const RateVector& rates) {
  return eval_surface_unchecked(params, rates.values());
}

double eval_surface_unchecked(const SurfaceParams& params,
                              std::span<const double> rates) {
  check_streams(params, rates.size());
  double d = params.gamma();
  for (std::size_t j = 0; j < rates.size(); ++j) {
    d += params.alpha(j) * std::exp2(-params.beta(j) * rates[j]);
  }
  return d;
}

std::vector<double> surface_gradient(const SurfaceParams& params,
                                     const RateVector& rates) {
  check_streams(params, rates.size());
  std::vector<double> grad(rates.size());
  for (std::size_t j = 0; j < rates.size(); ++j) {
    grad[j] = -params.alpha(j) * params.beta(j) * std::numbers::ln2 *
              std::exp2(-params.beta(j) * rates[j]);
  }
  return grad;
}

}  // namespace rdalloc
