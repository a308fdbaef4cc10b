#include "rdalloc/cli.hpp"

#include <CLI11.hpp>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <ctime>
#include <fstream>
#include <limits>
#include <map>
#include <ostream>
#include <sstream>

#include "rdalloc/errors.hpp"
#include "rdalloc/io.hpp"
#include "rdalloc/synthetic_oracle.hpp"

namespace rdalloc::cli {

namespace {

std::ifstream open_input(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "' for reading");
  return in;
}

std::ofstream open_output(const std::string& path) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  return out;
}

std::string fixed(double v, int digits = 4) {
  if (std::isnan(v)) return "-";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", digits, v);
  return buf;
}

std::string utc_timestamp() {
  const std::time_t now =
      std::chrono::system_clock::to_time_t(std::chrono::system_clock::now());
  std::tm tm{};
  gmtime_r(&now, &tm);
  char buf[32];
  std::strftime(buf, sizeof buf, "%Y-%m-%dT%H:%M:%SZ", &tm);
  return buf;
}

std::string cli_name(Method m) {
  switch (m) {
    case Method::closed_form:
      return "closed-form";
    case Method::clipped:
      return "proposed";
    case Method::equal:
      return "equal";
    case Method::prop_elements:
      return "prop-elements";
    case Method::prop_variance:
      return "prop-variance";
    case Method::grid_search:
      return "grid";
  }
  return "unknown";
}

const std::map<std::string, Method>& method_names() {
  static const std::map<std::string, Method> names = {
      {"proposed", Method::clipped},         {"closed-form", Method::closed_form},
      {"equal", Method::equal},              {"prop-elements", Method::prop_elements},
      {"prop-variance", Method::prop_variance}, {"grid", Method::grid_search}};
  return names;
}

std::optional<StreamStats> stats_from_flags(const std::string& elements,
                                            const std::string& variances) {
  if (elements.empty() && variances.empty()) return std::nullopt;
  if (elements.empty() || variances.empty()) {
    throw DomainError("--elements and --variances must be given together");
  }
  return StreamStats{io::parse_real_list(elements), io::parse_real_list(variances)};
}

Allocation run_method(Method m, const SurfaceParams& params,
                      const std::optional<StreamStats>& stats, double budget,
                      double grid_step) {
  Allocation a;
  switch (m) {
    case Method::closed_form:
      return allocate_closed_form(params, budget);
    case Method::clipped:
      return allocate_clipped(params, budget);
    case Method::grid_search:
      return grid_search_allocation(params, budget, grid_step);
    case Method::equal:
      a = allocate_equal(params.streams(), budget);
      break;
    case Method::prop_elements:
    case Method::prop_variance:
      if (!stats) {
        throw DomainError("method " + cli_name(m) +
                          " needs --elements and --variances");
      }
      stats->validate(params.streams());
      a = allocate_proportional(m == Method::prop_elements ? stats->element_counts
                                                           : stats->variances,
                                budget, m);
      break;
  }
  a.predicted_distortion = eval_surface(params, RateVector(a.rates));
  return a;
}

// Human-readable table as '#' comment lines, then the same rows as CSV.
void print_allocations(std::ostream& out, const std::vector<Allocation>& rows,
                       std::size_t streams) {
  std::ostringstream head;
  head << "# " << std::left;
  char buf[64];
  std::snprintf(buf, sizeof buf, "%-14s%12s", "method", "budget");
  head << buf;
  for (std::size_t j = 1; j <= streams; ++j) {
    std::snprintf(buf, sizeof buf, "%12s", ("R_" + std::to_string(j)).c_str());
    head << buf;
  }
  std::snprintf(buf, sizeof buf, "%14s%14s", "D_t", "multiplier");
  head << buf;
  out << head.str() << '\n';
  for (const auto& a : rows) {
    std::snprintf(buf, sizeof buf, "# %-14s%12s", cli_name(a.method).c_str(),
                  fixed(a.budget, 1).c_str());
    out << buf;
    for (double r : a.rates) {
      std::snprintf(buf, sizeof buf, "%12s", fixed(r, 2).c_str());
      out << buf;
    }
    std::snprintf(buf, sizeof buf, "%14s%14s", fixed(a.predicted_distortion, 6).c_str(),
                  a.multiplier ? fixed(*a.multiplier, 8).c_str() : "-");
    out << buf << '\n';
  }

  out << "method,budget";
  for (std::size_t j = 1; j <= streams; ++j) out << ",R_" << j;
  out << ",D_t,multiplier\n";
  for (const auto& a : rows) {
    out << cli_name(a.method) << ',' << io::format_double(a.budget);
    for (double r : a.rates) out << ',' << io::format_double(r);
    out << ',' << io::format_double(a.predicted_distortion) << ',';
    if (a.multiplier) out << io::format_double(*a.multiplier);
    out << '\n';
  }
}

void write_surface_row(std::ostream& out, const char* series,
                       std::optional<double> budget, double r1, double r2, double d) {
  out << series << ',' << (budget ? io::format_double(*budget) : "") << ','
      << io::format_double(r1) << ',' << io::format_double(r2) << ','
      << io::format_double(d) << '\n';
}

void require_two_streams(const SurfaceParams& params) {
  if (params.streams() != 2) {
    throw DomainError("--emit-surface needs a two-stream surface");
  }
}

// series,budget,R_1,R_2,D_t over an evenly spaced grid on [lo, hi]^2.
void write_surface_grid(std::ostream& out, const SurfaceParams& params,
                        double lo1, double hi1, double lo2, double hi2) {
  constexpr int kPoints = 41;
  for (int a = 0; a < kPoints; ++a) {
    for (int b = 0; b < kPoints; ++b) {
      const double r1 = lo1 + (hi1 - lo1) * a / (kPoints - 1);
      const double r2 = lo2 + (hi2 - lo2) * b / (kPoints - 1);
      write_surface_row(out, "surface", std::nullopt, r1, r2,
                        eval_surface(params, RateVector({r1, r2})));
    }
  }
}

SurfaceParams load_params(const std::string& path) {
  auto in = open_input(path);
  return io::read_params(in, path);
}

std::vector<RdSample> load_samples(const std::string& path,
                                   const std::optional<std::vector<double>>& weights,
                                   std::string baselines_path) {
  auto in = open_input(path);
  const auto table = io::read_sample_table(in, path);
  if (table.scalarized()) {
    if (weights) throw DomainError("--weights applies only to raw performance files");
    return io::to_samples(table);
  }
  if (baselines_path.empty()) baselines_path = path + ".baselines";
  auto bin = open_input(baselines_path);
  const auto baselines = io::read_baselines(bin, baselines_path);
  const auto perf = io::to_performance_table(table, baselines);
  const WeightVector w = weights ? WeightVector(*weights) : WeightVector::uniform(table.tasks);
  return build_rd_samples(perf, w);
}

// ---------------------------------------------------------------- fit

struct FitArgs {
  std::string input;
  std::string params_out;
  std::string weights;
  std::string baselines;
  std::string emit_surface;
  bool stamp = false;
  std::size_t max_iterations = 500;
};

int cmd_fit(const FitArgs& args, std::ostream& out) {
  ExperimentConfig config;
  config.input_path = args.input;
  config.output_path = args.params_out;
  config.fit.max_iterations = args.max_iterations;
  std::optional<std::vector<double>> weights;
  if (!args.weights.empty()) weights = io::parse_real_list(args.weights);

  const auto samples = load_samples(args.input, weights, args.baselines);
  config.n_streams = samples.front().rates.size();
  if (weights) {
    config.weights = WeightVector(*weights);
    config.n_tasks = weights->size();
  }
  const FitReport report = fit_surface(samples, config.fit);

  io::ParamsProvenance prov;
  prov.samples = report.samples;
  prov.r_squared = report.r_squared;
  prov.converged = report.converged;
  if (args.stamp) prov.timestamp = utc_timestamp();
  if (!args.params_out.empty()) {
    auto f = open_output(args.params_out);
    io::write_params(f, report.params, prov);
  }
  io::write_params(out, report.params, prov);
  out << "iterations = " << report.iterations << '\n';
  out << "residual_mean = " << io::format_double(report.residual_mean) << '\n';
  out << "residual_max_abs = " << io::format_double(report.residual_max_abs) << '\n';
  out << "projected_gradient = " << io::format_double(report.projected_gradient) << '\n';
  if (!report.r_squared) out << "# r_squared undefined: observed distortions are all equal\n";

  if (!args.emit_surface.empty()) {
    require_two_streams(report.params);
    double lo[2] = {samples.front().rates[0], samples.front().rates[1]};
    double hi[2] = {lo[0], lo[1]};
    for (const auto& s : samples) {
      for (int j = 0; j < 2; ++j) {
        lo[j] = std::min(lo[j], s.rates[j]);
        hi[j] = std::max(hi[j], s.rates[j]);
      }
    }
    auto f = open_output(args.emit_surface);
    f << "series,budget,R_1,R_2,D_t\n";
    for (const auto& s : samples) {
      write_surface_row(f, "sample", std::nullopt, s.rates[0], s.rates[1],
                        s.total_distortion);
    }
    write_surface_grid(f, report.params, lo[0], hi[0], lo[1], hi[1]);
  }
  return report.converged ? kSuccess : kNumericalFailure;
}

// ---------------------------------------------------------------- allocate

struct AllocArgs {
  std::string params;
  double budget = 0.0;
  std::vector<double> budgets;
  std::string method;
  std::string elements;
  std::string variances;
  double grid_step = 0.1;
  std::string emit_surface;
};

Method parse_method(const std::string& name) {
  const auto it = method_names().find(name);
  if (it == method_names().end()) throw DomainError("unknown method '" + name + "'");
  return it->second;
}

int cmd_allocate(const AllocArgs& args, std::ostream& out) {
  const SurfaceParams params = load_params(args.params);
  const auto stats = stats_from_flags(args.elements, args.variances);
  const Method m = parse_method(args.method);
  print_allocations(out, {run_method(m, params, stats, args.budget, args.grid_step)},
                    params.streams());
  return kSuccess;
}

int cmd_compare(const AllocArgs& args, std::ostream& out) {
  const SurfaceParams params = load_params(args.params);
  const auto stats = stats_from_flags(args.elements, args.variances);
  if (!stats) throw DomainError("compare needs --elements and --variances");
  std::vector<Allocation> rows;
  for (auto& r : compare_methods(params, *stats, args.budget)) {
    rows.push_back(std::move(r.allocation));
  }
  if (params.streams() <= 3 && args.grid_step > 0.0) {
    rows.push_back(grid_search_allocation(params, args.budget, args.grid_step));
  }
  print_allocations(out, rows, params.streams());
  return kSuccess;
}

int cmd_sweep(const AllocArgs& args, std::ostream& out) {
  ExperimentConfig config;
  const SurfaceParams params = load_params(args.params);
  config.n_streams = params.streams();
  config.budgets = args.budgets;
  config.stream_stats = stats_from_flags(args.elements, args.variances);
  config.input_path = args.params;
  config.output_path = args.emit_surface;
  config.validate();

  std::vector<Method> methods;
  if (!args.method.empty()) {
    methods = {parse_method(args.method)};
  } else {
    methods = {Method::clipped, Method::equal};
    if (config.stream_stats) {
      methods.push_back(Method::prop_elements);
      methods.push_back(Method::prop_variance);
    }
  }

  std::vector<Allocation> rows;
  for (double budget : config.budgets) {
    for (Method m : methods) {
      rows.push_back(run_method(m, params, config.stream_stats, budget, args.grid_step));
    }
  }
  print_allocations(out, rows, params.streams());

  if (methods.size() > 1 && methods.front() == Method::clipped) {
    for (std::size_t b = 0; b < config.budgets.size(); ++b) {
      const auto first = rows.begin() + static_cast<std::ptrdiff_t>(b * methods.size());
      const double proposed = first->predicted_distortion;
      double best_baseline = std::numeric_limits<double>::infinity();
      for (auto it = first + 1; it != first + static_cast<std::ptrdiff_t>(methods.size()); ++it) {
        best_baseline = std::min(best_baseline, it->predicted_distortion);
      }
      out << "# budget " << io::format_double(config.budgets[b])
          << ": proposed " << (proposed <= best_baseline ? "minimal" : "NOT minimal")
          << ", gap to best baseline " << fixed(best_baseline - proposed, 6) << '\n';
    }
  }

  if (!args.emit_surface.empty()) {
    require_two_streams(params);
    const double top = *std::max_element(config.budgets.begin(), config.budgets.end());
    auto f = open_output(args.emit_surface);
    f << "series,budget,R_1,R_2,D_t\n";
    write_surface_grid(f, params, 0.0, top, 0.0, top);
    constexpr int kLinePoints = 101;
    for (double budget : config.budgets) {
      for (int i = 0; i < kLinePoints; ++i) {
        const double r1 = budget * i / (kLinePoints - 1);
        const double r2 = std::max(0.0, budget - r1);
        write_surface_row(f, "constraint", budget, r1, r2,
                          eval_surface(params, RateVector({r1, r2})));
      }
    }
    for (const auto& a : rows) {
      write_surface_row(f, cli_name(a.method).c_str(), a.budget, a.rates[0],
                        a.rates[1], a.predicted_distortion);
    }
  }
  return kSuccess;
}

// ---------------------------------------------------------------- simulate

struct SimArgs {
  std::string model;
  std::string input;
  std::string baselines;
  std::string output;
  std::string raw_output;
  std::string weights;
  std::uint64_t seed = 42;
  double noise = 0.01;
  std::size_t grid_points = 10;
  double rate_min = 50.0;
  double rate_max = 3000.0;
};

int cmd_simulate(const SimArgs& args, std::ostream& out) {
  PerformanceTable table;
  if (!args.input.empty()) {
    // Re-scalarize an existing performance table; nothing is regenerated.
    auto in = open_input(args.input);
    const auto raw = io::read_sample_table(in, args.input);
    const std::string bpath =
        args.baselines.empty() ? args.input + ".baselines" : args.baselines;
    auto bin = open_input(bpath);
    table = io::to_performance_table(raw, io::read_baselines(bin, bpath));
  } else {
    std::vector<SyntheticTaskModel> models;
    if (args.model.empty()) {
      models = default_task_models();
    } else {
      auto in = open_input(args.model);
      models = io::read_task_models(in, args.model);
    }
    SamplingPlan plan{SamplingPlan::uniform_grid(models.front().coeffs.size(),
                                                 args.grid_points, args.rate_min,
                                                 args.rate_max),
                      args.noise, args.seed};
    table = generate_task_performances(models, plan);
  }

  const std::size_t tasks = table.front().tasks.size();
  const WeightVector weights = args.weights.empty()
                                   ? WeightVector::uniform(tasks)
                                   : WeightVector(io::parse_real_list(args.weights));
  const auto samples = build_rd_samples(table, weights);

  {
    auto f = open_output(args.output);
    io::write_samples(f, samples);
  }
  if (!args.raw_output.empty()) {
    auto f = open_output(args.raw_output);
    io::write_performances(f, table);
    auto b = open_output(args.raw_output + ".baselines");
    io::write_baselines(b, table);
  }
  out << "# wrote " << samples.size() << " samples to " << args.output << '\n';
  return kSuccess;
}

}  // namespace

void ExperimentConfig::validate() const {
  if (budgets.empty()) throw DomainError("no budgets given");
  for (double b : budgets) {
    if (!(b > 0.0) || !std::isfinite(b)) throw DomainError("budgets must be positive");
  }
  if (weights && n_tasks != 0 && weights->size() != n_tasks) {
    throw DomainError("weight count does not match the task count");
  }
  if (stream_stats) stream_stats->validate(n_streams);
}

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Rate-distortion surface fitting and bit allocation across feature streams"};
  app.name(args.empty() ? "rdalloc" : args.front());
  app.require_subcommand(1);

  FitArgs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit the surface to a samples CSV");
  fit_cmd->add_option("--input", fit.input, "Samples CSV (D_t or raw A_i columns)")->required();
  fit_cmd->add_option("--params", fit.params_out, "Where to write the fitted parameters");
  fit_cmd->add_option("--weights", fit.weights, "Task weights for raw performance files, e.g. 8,1,1");
  fit_cmd->add_option("--baselines", fit.baselines, "Baselines file (default: <input>.baselines)");
  fit_cmd->add_option("--emit-surface", fit.emit_surface, "Write samples and fitted surface grid as CSV");
  fit_cmd->add_option("--max-iterations", fit.max_iterations, "Iteration cap")->check(CLI::PositiveNumber);
  fit_cmd->add_flag("--stamp", fit.stamp, "Record a UTC timestamp in the params file");

  AllocArgs alloc;
  alloc.method = "proposed";
  auto* alloc_cmd = app.add_subcommand("allocate", "Allocate a budget with one method");
  alloc_cmd->add_option("--params", alloc.params, "Params file")->required();
  alloc_cmd->add_option("--budget", alloc.budget, "Total rate in kbits")->required();
  alloc_cmd->add_option("--method", alloc.method, "proposed|closed-form|equal|prop-elements|prop-variance|grid");
  alloc_cmd->add_option("--elements", alloc.elements, "Per-stream element counts");
  alloc_cmd->add_option("--variances", alloc.variances, "Per-stream element variances");
  alloc_cmd->add_option("--grid-step", alloc.grid_step, "Lattice step for --method grid (kbits)");

  AllocArgs cmp;
  cmp.grid_step = 0.0;
  auto* cmp_cmd = app.add_subcommand("compare", "Compare all methods at one budget");
  cmp_cmd->add_option("--params", cmp.params, "Params file")->required();
  cmp_cmd->add_option("--budget", cmp.budget, "Total rate in kbits")->required();
  cmp_cmd->add_option("--elements", cmp.elements, "Per-stream element counts")->required();
  cmp_cmd->add_option("--variances", cmp.variances, "Per-stream element variances")->required();
  cmp_cmd->add_option("--grid-step", cmp.grid_step, "Also run the grid-search oracle with this step");

  AllocArgs sweep;
  std::string budgets_text = "1000,1500,2000";
  auto* sweep_cmd = app.add_subcommand("sweep", "Compare methods over several budgets");
  sweep_cmd->add_option("--params", sweep.params, "Params file")->required();
  sweep_cmd->add_option("--budgets", budgets_text, "Comma-separated budgets in kbits");
  sweep_cmd->add_option("--method", sweep.method, "Restrict to one method");
  sweep_cmd->add_option("--elements", sweep.elements, "Per-stream element counts");
  sweep_cmd->add_option("--variances", sweep.variances, "Per-stream element variances");
  sweep_cmd->add_option("--grid-step", sweep.grid_step, "Lattice step for --method grid (kbits)");
  sweep_cmd->add_option("--emit-surface", sweep.emit_surface, "Write surface grid and constraint lines as CSV");

  SimArgs sim;
  auto* sim_cmd = app.add_subcommand("simulate", "Generate or re-weight a synthetic dataset");
  sim_cmd->add_option("--model", sim.model, "Synthetic task model file (default: built-in 3-task model)");
  sim_cmd->add_option("--input", sim.input, "Existing raw performance CSV to re-scalarize");
  sim_cmd->add_option("--baselines", sim.baselines, "Baselines for --input (default: <input>.baselines)");
  sim_cmd->add_option("--output", sim.output, "Samples CSV to write")->required();
  sim_cmd->add_option("--raw-output", sim.raw_output, "Also write raw performances (+ .baselines)");
  sim_cmd->add_option("--weights", sim.weights, "Task weights, e.g. 8,1,1");
  sim_cmd->add_option("--seed", sim.seed, "Noise seed");
  sim_cmd->add_option("--noise", sim.noise, "Noise sigma relative to each baseline")->check(CLI::NonNegativeNumber);
  sim_cmd->add_option("--grid-points", sim.grid_points, "Grid points per rate axis")->check(CLI::Range(2, 1000));
  sim_cmd->add_option("--rate-min", sim.rate_min, "Lowest grid rate (kbits)");
  sim_cmd->add_option("--rate-max", sim.rate_max, "Highest grid rate (kbits)");

  std::vector<const char*> argv;
  for (const auto& a : args) argv.push_back(a.c_str());
  try {
    app.parse(static_cast<int>(argv.size()), argv.data());
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e, out, err);
    return rc == 0 ? kSuccess : kUsageError;
  }

  try {
    if (fit_cmd->parsed()) return cmd_fit(fit, out);
    if (alloc_cmd->parsed()) return cmd_allocate(alloc, out);
    if (cmp_cmd->parsed()) return cmd_compare(cmp, out);
    if (sweep_cmd->parsed()) {
      sweep.budgets = io::parse_real_list(budgets_text);
      return cmd_sweep(sweep, out);
    }
    if (sim_cmd->parsed()) return cmd_simulate(sim, out);
  } catch (const TooFewSamplesError& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerateDesign;
  } catch (const DegenerateDesignError& e) {
    err << "error: " << e.what() << '\n';
    return kDegenerateDesign;
  } catch (const ParseError& e) {
    err << "parse error: " << e.what() << '\n';
    return kUsageError;
  } catch (const UndefinedValueError& e) {
    err << "error: " << e.what() << '\n';
    return kNumericalFailure;
  } catch (const std::exception& e) {
    err << "error: " << e.what() << '\n';
    return kUsageError;
  }
  return kUsageError;
}

}  // namespace rdalloc::cli
