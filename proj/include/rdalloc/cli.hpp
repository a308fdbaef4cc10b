#pragma once

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "rdalloc/allocator.hpp"
#include "rdalloc/distortion_model.hpp"
#include "rdalloc/surface_fit.hpp"

namespace rdalloc::cli {

enum ExitCode : int {
  kSuccess = 0,
  kUsageError = 2,        // bad flags, unreadable or malformed files
  kNumericalFailure = 3,  // fit did not converge
  kDegenerateDesign = 4,  // too few samples or a constant rate column
};

/// Settings shared by the experiment subcommands.
struct ExperimentConfig {
  std::size_t n_streams = 0;
  std::size_t n_tasks = 0;
  std::optional<WeightVector> weights;
  std::vector<double> budgets;
  std::optional<StreamStats> stream_stats;
  FitOptions fit;
  std::string input_path;
  std::string output_path;

  /// Budgets nonempty and positive; weights and stats sized to the data.
  void validate() const;
};

/// Runs one subcommand (argv[0] is the program name). Normal output goes to
/// `out`, diagnostics to `err`; the return value is the process exit code.
int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace rdalloc::cli
