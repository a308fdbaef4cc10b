#include "rdalloc/synthetic_oracle.hpp"

#include <cmath>
#include <limits>
#include <numbers>
#include <string>

#include "rdalloc/errors.hpp"

namespace rdalloc {

double SyntheticTaskModel::distortion(std::span<const double> rates) const {
  double d = offset;
  for (std::size_t j = 0; j < rates.size(); ++j) {
    d += coeffs[j] * std::exp2(-decays[j] * rates[j]);
  }
  return d;
}

void SyntheticTaskModel::validate(std::size_t streams) const {
  const std::string who = "task " + std::to_string(task_id);
  if (coeffs.size() != streams || decays.size() != streams) {
    throw DomainError(who + ": expected " + std::to_string(streams) +
                      " coefficients and decays");
  }
  if (baseline == 0.0 || !std::isfinite(baseline)) {
    throw DomainError(who + ": baseline must be finite and nonzero");
  }
  if (!std::isfinite(offset)) throw DomainError(who + ": offset must be finite");
  for (std::size_t j = 0; j < streams; ++j) {
    if (!(coeffs[j] >= 0.0) || !std::isfinite(coeffs[j])) {
      throw DomainError(who + ": coefficients must be nonnegative");
    }
    if (!(decays[j] > 0.0) || !std::isfinite(decays[j])) {
      throw DomainError(who + ": decays must be positive");
    }
  }
}

std::vector<RateVector> SamplingPlan::uniform_grid(std::size_t streams,
                                                   std::size_t points_per_axis,
                                                   double lo, double hi) {
  if (streams == 0) throw DomainError("grid needs at least one stream");
  if (points_per_axis < 2) throw DomainError("grid needs at least 2 points per axis");
  if (!(lo >= 0.0) || !(hi > lo) || !std::isfinite(hi)) {
    throw DomainError("grid range must satisfy 0 <= lo < hi");
  }
  std::vector<double> axis(points_per_axis);
  const double span = hi - lo;
  const auto last = static_cast<double>(points_per_axis - 1);
  for (std::size_t i = 0; i < points_per_axis; ++i) {
    axis[i] = lo + span * (static_cast<double>(i) / last);
  }
  std::size_t total = 1;
  for (std::size_t j = 0; j < streams; ++j) total *= points_per_axis;

  std::vector<RateVector> grid;
  grid.reserve(total);
  std::vector<std::size_t> idx(streams, 0);
  for (std::size_t p = 0; p < total; ++p) {
    std::vector<double> rates(streams);
    for (std::size_t j = 0; j < streams; ++j) rates[j] = axis[idx[j]];
    grid.emplace_back(std::move(rates));
    for (std::size_t j = streams; j-- > 0;) {
      if (++idx[j] < points_per_axis) break;
      idx[j] = 0;
    }
  }
  return grid;
}

double GaussianSource::next() {
  constexpr double kScale = 0x1.0p-53;
  const std::uint64_t x1 = engine_();
  const std::uint64_t x2 = engine_();
  const double u1 = static_cast<double>((x1 >> 11) + 1) * kScale;
  const double u2 = static_cast<double>(x2 >> 11) * kScale;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

PerformanceTable generate_task_performances(
    std::span<const SyntheticTaskModel> models, const SamplingPlan& plan) {
  if (models.empty()) throw DomainError("need at least one task model");
  if (plan.rate_grid.empty()) throw DomainError("sampling grid is empty");
  if (!(plan.noise_sigma >= 0.0) || !std::isfinite(plan.noise_sigma)) {
    throw DomainError("noise sigma must be finite and nonnegative");
  }
  const std::size_t n = plan.rate_grid.front().size();
  for (const auto& m : models) m.validate(n);
  for (const auto& r : plan.rate_grid) {
    if (r.size() != n) throw DomainError("sampling grid mixes dimensions");
  }

  GaussianSource noise(plan.seed);
  PerformanceTable table;
  table.reserve(plan.rate_grid.size());
  for (const auto& rates : plan.rate_grid) {
    PerformancePoint point{rates, {}};
    point.tasks.reserve(models.size());
    for (const auto& m : models) {
      const double d = m.distortion(rates.values());
      if (d < 0.0) {
        throw DomainError("task " + std::to_string(m.task_id) +
                          " has negative model distortion on the grid");
      }
      const double z = noise.next();
      point.tasks.push_back(
          {m.task_id, m.baseline,
           m.baseline * (1.0 - d) + plan.noise_sigma * m.baseline * z});
    }
    table.push_back(std::move(point));
  }
  return table;
}

std::vector<RdSample> build_rd_samples(const PerformanceTable& table,
                                       const WeightVector& weights) {
  const std::size_t m = weights.size();
  std::vector<RdSample> samples;
  samples.reserve(table.size());
  std::vector<double> d(m);
  std::vector<bool> seen(m);
  for (std::size_t k = 0; k < table.size(); ++k) {
    const auto& point = table[k];
    seen.assign(m, false);
    for (const auto& perf : point.tasks) {
      if (perf.task_id < 1 || perf.task_id > m || seen[perf.task_id - 1]) {
        throw DomainError("grid point " + std::to_string(k + 1) +
                          ": unexpected or duplicate task " +
                          std::to_string(perf.task_id));
      }
      seen[perf.task_id - 1] = true;
      d[perf.task_id - 1] = task_distortion(perf);
    }
    for (std::size_t i = 0; i < m; ++i) {
      if (!seen[i]) {
        throw DomainError("grid point " + std::to_string(k + 1) +
                          ": missing task " + std::to_string(i + 1));
      }
    }
    samples.push_back({point.rates, total_distortion(d, weights)});
  }
  return samples;
}

Allocation grid_search_allocation(const SurfaceParams& params, double budget,
                                  double step) {
  const std::size_t n = params.streams();
  if (n > 3) {
    throw UnsupportedDimensionError("grid search supports at most 3 streams, got " +
                                    std::to_string(n));
  }
  if (!(step > 0.0) || !std::isfinite(step)) throw DomainError("step must be positive");
  if (!(budget >= 0.0) || !std::isfinite(budget)) {
    throw DomainError("budget must be finite and nonnegative");
  }

  Allocation out;
  out.method = Method::grid_search;
  out.budget = budget;
  if (n == 1) {
    out.rates = {budget};
    out.predicted_distortion = eval_surface(params, RateVector(out.rates));
    return out;
  }

  // Lattice spacing budget / K with K = ceil(budget / step), so every
  // coordinate, including 0 and the full budget, is a lattice value.
  const double ratio = budget / step;
  double cells = std::ceil(ratio);
  if (std::abs(std::round(ratio) - ratio) <= 1e-9 * std::max(1.0, ratio)) {
    cells = std::round(ratio);
  }
  const auto steps = static_cast<std::size_t>(std::max(cells, 1.0));
  auto lattice = [&](std::size_t k) {
    return budget * static_cast<double>(k) / static_cast<double>(steps);
  };
  auto last_rate = [&](std::size_t used) { return lattice(steps - used); };

  // Separable objective: tabulate each stream's term once.
  std::vector<std::vector<double>> term(n, std::vector<double>(steps + 1));
  for (std::size_t j = 0; j + 1 < n; ++j) {
    for (std::size_t k = 0; k <= steps; ++k) {
      term[j][k] = params.alpha(j) *
                   std::exp2(-params.beta(j) * lattice(k));
    }
  }
  for (std::size_t used = 0; used <= steps; ++used) {
    term[n - 1][used] =
        params.alpha(n - 1) * std::exp2(-params.beta(n - 1) * last_rate(used));
  }

  double best = std::numeric_limits<double>::infinity();
  std::size_t best_a = 0, best_b = 0;
  if (n == 2) {
    for (std::size_t a = 0; a <= steps; ++a) {
      const double v = term[0][a] + term[1][a];
      if (v < best) {
        best = v;
        best_a = a;
      }
    }
    out.rates = {lattice(best_a), last_rate(best_a)};
  } else {
    const double* t1 = term[1].data();
    const double* t2 = term[2].data();
    for (std::size_t a = 0; a <= steps; ++a) {
      const double head = term[0][a];
      const std::size_t rest = steps - a;
      for (std::size_t b = 0; b <= rest; ++b) {
        const double v = head + t1[b] + t2[a + b];
        if (v < best) {
          best = v;
          best_a = a;
          best_b = b;
        }
      }
    }
    out.rates = {lattice(best_a), lattice(best_b), last_rate(best_a + best_b)};
  }
  out.predicted_distortion = eval_surface(params, RateVector(out.rates));
  return out;
}

std::vector<SyntheticTaskModel> default_task_models() {
  const std::vector<double> decays = {7.07e-4, 2.11e-2};
  return {
      {1, 62.59, 0.002, {0.1000, 0.3000}, decays},  // segmentation, mIoU %
      {2, 0.85, 0.003, {0.2245, 0.5309}, decays},   // disparity, accuracy
      {3, 26.07, 0.003, {0.4000, 1.0000}, decays},  // reconstruction, PSNR dB
  };
}

SamplingPlan default_sampling_plan(std::uint64_t seed, double noise_sigma) {
  return {SamplingPlan::uniform_grid(2, 10, 50.0, 3000.0), noise_sigma, seed};
}

StreamStats default_stream_stats() {
  // 256 x 64 x 128 and 512 x 32 x 64 feature tensors.
  return {{2097152.0, 1048576.0}, {2.1, 1.0}};
}

}  // namespace rdalloc
