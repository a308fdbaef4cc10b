#include "rdalloc/surface_fit.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <set>
#include <string>

#include "rdalloc/errors.hpp"

namespace rdalloc {

namespace {

using Eigen::MatrixXd;
using Eigen::VectorXd;

// Parameter layout: [gamma, alpha_1..N, beta_1..N].
std::size_t alpha_index(std::size_t j) { return 1 + j; }
std::size_t beta_index(std::size_t j, std::size_t n) { return 1 + n + j; }

struct Problem {
  MatrixXd rates;     // samples x streams
  VectorXd observed;  // samples
  std::size_t streams() const { return static_cast<std::size_t>(rates.cols()); }
};

VectorXd to_vector(const SurfaceParams& p) {
  const std::size_t n = p.streams();
  VectorXd x(1 + 2 * n);
  x[0] = p.gamma();
  for (std::size_t j = 0; j < n; ++j) {
    x[alpha_index(j)] = p.alpha(j);
    x[beta_index(j, n)] = p.beta(j);
  }
  return x;
}

SurfaceParams to_params(const VectorXd& x, std::size_t n) {
  std::vector<double> alphas(n), betas(n);
  for (std::size_t j = 0; j < n; ++j) {
    alphas[j] = x[alpha_index(j)];
    betas[j] = x[beta_index(j, n)];
  }
  return SurfaceParams(x[0], std::move(alphas), std::move(betas));
}

VectorXd lower_bounds(std::size_t n, const FitOptions& opt) {
  VectorXd lb(1 + 2 * n);
  lb[0] = -std::numeric_limits<double>::infinity();
  for (std::size_t j = 0; j < n; ++j) {
    lb[alpha_index(j)] = opt.alpha_min;
    lb[beta_index(j, n)] = opt.beta_min;
  }
  return lb;
}

// fitted - observed
VectorXd residuals(const Problem& pb, const VectorXd& x) {
  const std::size_t n = pb.streams();
  VectorXd r = VectorXd::Constant(pb.observed.size(), x[0]);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = x[alpha_index(j)];
    const double b = x[beta_index(j, n)];
    for (Eigen::Index k = 0; k < r.size(); ++k) {
      r[k] += a * std::exp2(-b * pb.rates(k, j));
    }
  }
  return r - pb.observed;
}

MatrixXd jacobian(const Problem& pb, const VectorXd& x) {
  const std::size_t n = pb.streams();
  const Eigen::Index m = pb.observed.size();
  MatrixXd jac(m, x.size());
  jac.col(0).setOnes();
  for (std::size_t j = 0; j < n; ++j) {
    const double a = x[alpha_index(j)];
    const double b = x[beta_index(j, n)];
    for (Eigen::Index k = 0; k < m; ++k) {
      const double rate = pb.rates(k, j);
      const double e = std::exp2(-b * rate);
      jac(k, alpha_index(j)) = e;
      jac(k, beta_index(j, n)) = -a * rate * std::numbers::ln2 * e;
    }
  }
  return jac;
}

VectorXd project_gradient(const VectorXd& grad, const VectorXd& x,
                          const VectorXd& lb) {
  VectorXd g = grad;
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (x[i] <= lb[i] && g[i] > 0.0) g[i] = 0.0;
  }
  return g;
}

// True when every projected-gradient component is within tolerance or within
// the floating-point error of evaluating J^T r at x.
bool stationary(const Problem& pb, const VectorXd& x, const MatrixXd& jac,
                const VectorXd& g, double tolerance) {
  const std::size_t n = pb.streams();
  const Eigen::Index m = pb.observed.size();
  VectorXd magnitude = pb.observed.cwiseAbs().array() + std::abs(x[0]);
  for (std::size_t j = 0; j < n; ++j) {
    const double a = x[alpha_index(j)];
    const double b = x[beta_index(j, n)];
    for (Eigen::Index k = 0; k < m; ++k) {
      const double br = b * pb.rates(k, j);
      magnitude[k] += a * std::exp2(-br) * (1.0 + std::abs(br) * std::numbers::ln2);
    }
  }
  const double unit = 16.0 * static_cast<double>(n + 2) *
                      std::numeric_limits<double>::epsilon();
  const VectorXd floor = unit * (jac.cwiseAbs().transpose() * magnitude);
  for (Eigen::Index i = 0; i < g.size(); ++i) {
    if (std::abs(g[i]) > std::max(tolerance, floor[i])) return false;
  }
  return true;
}

struct Outcome {
  VectorXd x;
  double cost = 0.0;
  double projected_gradient = 0.0;
  std::size_t iterations = 0;
  bool converged = false;
};

// Levenberg-Marquardt with More's diagonal scaling and projection onto the
// lower bounds. Variables sitting on a bound whose gradient pushes outward are
// frozen for the step.
Outcome levenberg_marquardt(const Problem& pb, VectorXd x, const VectorXd& lb,
                            const FitOptions& opt) {
  x = x.cwiseMax(lb);
  const Eigen::Index p = x.size();
  VectorXd r = residuals(pb, x);
  double cost = 0.5 * r.squaredNorm();
  MatrixXd jac = jacobian(pb, x);
  VectorXd scale = jac.colwise().norm().transpose();
  double mu = 1e-3;
  double nu = 2.0;

  // Once the cost stops changing, a few extra steps drive the gradient down to
  // working precision before giving up on the gradient test.
  constexpr std::size_t kPolishSteps = 50;
  std::optional<std::size_t> cost_settled_at;

  Outcome out;
  for (std::size_t iter = 0;; ++iter) {
    const VectorXd raw_grad = jac.transpose() * r;
    const VectorXd g = project_gradient(raw_grad, x, lb);
    out.iterations = iter;
    out.projected_gradient = g.lpNorm<Eigen::Infinity>();
    if (cost == 0.0 || out.projected_gradient <= opt.gradient_tolerance) {
      out.converged = true;
      break;
    }
    if (cost_settled_at && iter >= *cost_settled_at + kPolishSteps) {
      out.converged = stationary(pb, x, jac, g, opt.gradient_tolerance);
      break;
    }
    if (iter >= opt.max_iterations) break;

    std::vector<Eigen::Index> free;
    for (Eigen::Index i = 0; i < p; ++i) {
      if (!(x[i] <= lb[i] && raw_grad[i] > 0.0)) {
        free.push_back(i);
      }
    }
    const auto nf = static_cast<Eigen::Index>(free.size());
    const Eigen::Index m = r.size();

    bool accepted = false;
    bool stalled = false;
    while (!accepted) {
      MatrixXd aug = MatrixXd::Zero(m + nf, nf);
      VectorXd rhs = VectorXd::Zero(m + nf);
      rhs.head(m) = -r;
      const double sqrt_mu = std::sqrt(mu);
      for (Eigen::Index c = 0; c < nf; ++c) {
        aug.col(c).head(m) = jac.col(free[c]);
        aug(m + c, c) = sqrt_mu * std::max(scale[free[c]], 1e-300);
      }
      const VectorXd step_free = aug.colPivHouseholderQr().solve(rhs);

      VectorXd trial = x;
      for (Eigen::Index c = 0; c < nf; ++c) trial[free[c]] += step_free[c];
      trial = trial.cwiseMax(lb);
      const VectorXd step = trial - x;

      bool negligible = true;
      for (Eigen::Index i = 0; i < p && negligible; ++i) {
        negligible = std::abs(step[i]) <=
                     2.0 * std::numeric_limits<double>::epsilon() *
                         std::max(std::abs(x[i]), std::numeric_limits<double>::min());
      }
      if (negligible) {
        stalled = true;
        break;
      }
      const VectorXd r_trial = residuals(pb, trial);
      const double cost_trial = 0.5 * r_trial.squaredNorm();
      const double predicted = cost - 0.5 * (r + jac * step).squaredNorm();
      const double actual = cost - cost_trial;
      const double rho = predicted > 0.0 ? actual / predicted : -1.0;

      // A step that keeps the cost within rounding and lowers the gradient is
      // still progress.
      bool polish = false;
      if (std::isfinite(cost_trial) &&
          cost_trial <= cost * (1.0 + 8.0 * std::numeric_limits<double>::epsilon())) {
        const VectorXd g_trial = project_gradient(
            jacobian(pb, trial).transpose() * r_trial, trial, lb);
        polish = g_trial.lpNorm<Eigen::Infinity>() < g.lpNorm<Eigen::Infinity>();
      }
      if (polish || (std::isfinite(cost_trial) && actual > 0.0 && rho > 1e-4)) {
        const bool small_change = actual <= opt.cost_tolerance * cost;
        x = trial;
        r = r_trial;
        cost = cost_trial;
        jac = jacobian(pb, x);
        scale = scale.cwiseMax(jac.colwise().norm().transpose());
        mu *= polish ? 1.0 / 3.0
                    : std::max(1.0 / 3.0, 1.0 - std::pow(2.0 * rho - 1.0, 3));
        nu = 2.0;
        accepted = true;
        if (small_change && !cost_settled_at) cost_settled_at = iter;
      } else {
        mu *= nu;
        nu *= 2.0;
        if (!(mu < 1e300)) {
          stalled = true;
          break;
        }
      }
    }
    if (stalled) {
      // No decrease is available at working precision.
      out.iterations = iter + 1;
      const VectorXd g_final = project_gradient(jac.transpose() * r, x, lb);
      out.projected_gradient = g_final.lpNorm<Eigen::Infinity>();
      out.converged = stationary(pb, x, jac, g_final, opt.gradient_tolerance);
      break;
    }
  }
  out.x = x;
  out.cost = cost;
  return out;
}

// Least-squares line y = intercept + slope * t.
bool fit_line(const std::vector<double>& t, const std::vector<double>& y,
              double& slope, double& intercept) {
  const auto n = static_cast<double>(t.size());
  if (t.size() < 2) return false;
  double mt = 0.0, my = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    mt += t[i];
    my += y[i];
  }
  mt /= n;
  my /= n;
  double stt = 0.0, sty = 0.0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    stt += (t[i] - mt) * (t[i] - mt);
    sty += (t[i] - mt) * (y[i] - my);
  }
  if (!(stt > 0.0)) return false;
  slope = sty / stt;
  intercept = my - slope * mt;
  return std::isfinite(slope) && std::isfinite(intercept);
}

// Starting points: a log-linear regression along the slice where the other
// rates are at their maximum, and a scale-only fallback.
std::vector<VectorXd> initial_guesses(const Problem& pb, const FitOptions& opt) {
  const std::size_t n = pb.streams();
  const double d_min = pb.observed.minCoeff();
  const double d_range = pb.observed.maxCoeff() - d_min;
  const double floor = std::max(1e-3 * d_range, 1e-300);

  VectorXd fallback(1 + 2 * n);
  VectorXd sliced(1 + 2 * n);
  fallback[0] = sliced[0] = d_min;
  for (std::size_t j = 0; j < n; ++j) {
    const double r_range = pb.rates.col(j).maxCoeff() - pb.rates.col(j).minCoeff();
    fallback[alpha_index(j)] = std::max(d_range, opt.alpha_min);
    fallback[beta_index(j, n)] = std::max(1.0 / r_range, opt.beta_min);

    std::vector<double> t, y;
    for (Eigen::Index k = 0; k < pb.rates.rows(); ++k) {
      bool others_max = true;
      for (std::size_t o = 0; o < n && others_max; ++o) {
        if (o != j && pb.rates(k, o) < pb.rates.col(o).maxCoeff()) {
          others_max = false;
        }
      }
      const double excess = pb.observed[k] - d_min;
      if (others_max && excess > floor) {
        t.push_back(pb.rates(k, j));
        y.push_back(std::log2(excess));
      }
    }
    double slope = 0.0, intercept = 0.0;
    if (fit_line(t, y, slope, intercept) && slope < 0.0) {
      sliced[alpha_index(j)] = std::max(std::exp2(intercept), opt.alpha_min);
      sliced[beta_index(j, n)] = std::max(-slope, opt.beta_min);
    } else {
      sliced[alpha_index(j)] = fallback[alpha_index(j)];
      sliced[beta_index(j, n)] = fallback[beta_index(j, n)];
    }
  }
  if (sliced == fallback) return {sliced};
  return {sliced, fallback};
}

// Canonical ordering so the result does not depend on the input order.
Problem make_problem(std::span<const RdSample> samples) {
  std::vector<const RdSample*> order;
  order.reserve(samples.size());
  for (const auto& s : samples) order.push_back(&s);
  std::sort(order.begin(), order.end(), [](const RdSample* a, const RdSample* b) {
    const auto ra = a->rates.values();
    const auto rb = b->rates.values();
    if (std::lexicographical_compare(ra.begin(), ra.end(), rb.begin(), rb.end()))
      return true;
    if (std::lexicographical_compare(rb.begin(), rb.end(), ra.begin(), ra.end()))
      return false;
    return a->total_distortion < b->total_distortion;
  });
  const std::size_t n = samples.front().rates.size();
  Problem pb;
  pb.rates.resize(static_cast<Eigen::Index>(samples.size()),
                  static_cast<Eigen::Index>(n));
  pb.observed.resize(static_cast<Eigen::Index>(samples.size()));
  for (std::size_t k = 0; k < order.size(); ++k) {
    for (std::size_t j = 0; j < n; ++j) {
      pb.rates(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(j)) =
          order[k]->rates[j];
    }
    pb.observed[static_cast<Eigen::Index>(k)] = order[k]->total_distortion;
  }
  return pb;
}

void validate(std::span<const RdSample> samples) {
  if (samples.empty()) throw TooFewSamplesError(0, 3);
  const std::size_t n = samples.front().rates.size();
  if (n == 0) throw DomainError("samples have no rate coordinates");
  for (std::size_t k = 0; k < samples.size(); ++k) {
    if (samples[k].rates.size() != n) {
      throw DomainError("sample " + std::to_string(k + 1) + " has " +
                        std::to_string(samples[k].rates.size()) +
                        " rates, expected " + std::to_string(n));
    }
    if (!std::isfinite(samples[k].total_distortion)) {
      throw DomainError("sample " + std::to_string(k + 1) +
                        " has a non-finite distortion");
    }
    for (double rate : samples[k].rates.values()) {
      if (!std::isfinite(rate)) {
        throw DomainError("sample " + std::to_string(k + 1) +
                          " has a non-finite rate");
      }
    }
  }
  if (samples.size() < 2 * n + 1) throw TooFewSamplesError(samples.size(), 2 * n + 1);
  for (std::size_t j = 0; j < n; ++j) {
    std::set<double> distinct;
    for (const auto& s : samples) distinct.insert(s.rates[j]);
    if (distinct.size() < 2) throw DegenerateDesignError(j + 1);
  }
}

void check_dimensions(std::span<const RdSample> samples,
                      const SurfaceParams& params) {
  if (samples.empty()) throw DomainError("no samples");
  for (const auto& s : samples) {
    if (s.rates.size() != params.streams()) {
      throw DomainError("sample dimension does not match the surface");
    }
  }
}

}  // namespace

FitReport fit_surface(std::span<const RdSample> samples,
                      const FitOptions& options) {
  validate(samples);
  const Problem pb = make_problem(samples);
  const std::size_t n = pb.streams();
  const VectorXd lb = lower_bounds(n, options);

  Outcome best;
  bool have_best = false;
  for (const VectorXd& start : initial_guesses(pb, options)) {
    Outcome run = levenberg_marquardt(pb, start, lb, options);
    const double rounding = 8.0 * std::numeric_limits<double>::epsilon() *
                            (have_best ? best.cost : 0.0);
    const bool tie = have_best && std::abs(run.cost - best.cost) <= rounding;
    const bool better =
        !have_best || (!tie && run.cost < best.cost) ||
        (tie && (run.converged != best.converged
                     ? run.converged
                     : run.projected_gradient < best.projected_gradient));
    if (better) {
      best = std::move(run);
      have_best = true;
    }
  }

  FitReport report{.params = to_params(best.x, n), .r_squared = std::nullopt};
  report.cost = best.cost;
  report.projected_gradient = best.projected_gradient;
  report.iterations = best.iterations;
  report.converged = best.converged;
  report.samples = samples.size();
  try {
    report.r_squared = r_squared(samples, report.params);
  } catch (const UndefinedValueError&) {
    report.r_squared.reset();
  }
  const ResidualStats stats = residual_stats(samples, report.params);
  report.residual_mean = stats.mean;
  report.residual_max_abs = stats.max_abs;
  return report;
}

double r_squared(std::span<const RdSample> samples, const SurfaceParams& params) {
  check_dimensions(samples, params);
  double mean = 0.0;
  for (const auto& s : samples) mean += s.total_distortion;
  mean /= static_cast<double>(samples.size());
  double ss_res = 0.0, ss_tot = 0.0;
  for (const auto& s : samples) {
    const double e = s.total_distortion - eval_surface(params, s.rates);
    ss_res += e * e;
    ss_tot += (s.total_distortion - mean) * (s.total_distortion - mean);
  }
  if (ss_tot == 0.0) {
    if (ss_res == 0.0) return 1.0;
    throw UndefinedValueError(
        "R^2 is undefined: all observed distortions are identical and the "
        "surface does not reproduce them");
  }
  return 1.0 - ss_res / ss_tot;
}

ResidualStats residual_stats(std::span<const RdSample> samples,
                             const SurfaceParams& params) {
  check_dimensions(samples, params);
  ResidualStats out;
  for (const auto& s : samples) {
    const double e = s.total_distortion - eval_surface(params, s.rates);
    out.mean += e;
    out.max_abs = std::max(out.max_abs, std::abs(e));
  }
  out.mean /= static_cast<double>(samples.size());
  return out;
}

std::vector<double> projected_cost_gradient(std::span<const RdSample> samples,
                                            const SurfaceParams& params,
                                            const FitOptions& options) {
  check_dimensions(samples, params);
  const Problem pb = make_problem(samples);
  const VectorXd x = to_vector(params);
  const VectorXd g = project_gradient(
      jacobian(pb, x).transpose() * residuals(pb, x), x,
      lower_bounds(params.streams(), options));
  return {g.data(), g.data() + g.size()};
}

}  // namespace rdalloc
