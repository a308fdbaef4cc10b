#pragma once

// Text formats used by the command-line tool. See docs/file_formats.md.

#include <cstddef>
#include <iosfwd>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "rdalloc/distortion_model.hpp"
#include "rdalloc/surface_fit.hpp"
#include "rdalloc/synthetic_oracle.hpp"

namespace rdalloc::io {

/// Shortest decimal text that parses back to the same double.
std::string format_double(double v);

/// Whole-string parse; nullopt on trailing garbage or an empty field.
std::optional<double> parse_double(std::string_view text);

/// Comma-separated reals, e.g. "8,1,1". Throws DomainError on bad input.
std::vector<double> parse_real_list(std::string_view text);

/// A samples CSV: rates plus either the total distortion (D_t column) or the
/// measured performance of every task (A_1..A_M columns).
struct SampleTable {
  std::size_t streams = 0;
  std::size_t tasks = 0;  // 0 for the D_t form
  std::vector<RateVector> rates;
  std::vector<double> totals;                     // D_t form
  std::vector<std::vector<double>> performances;  // A form, one row per sample

  bool scalarized() const { return tasks == 0; }
};

SampleTable read_sample_table(std::istream& in, const std::string& source);

std::vector<RdSample> to_samples(const SampleTable& table);

/// Joins the A form with the baselines sidecar.
PerformanceTable to_performance_table(const SampleTable& table,
                                      std::span<const double> baselines);

void write_samples(std::ostream& out, std::span<const RdSample> samples);
void write_performances(std::ostream& out, const PerformanceTable& table);

/// Ordered `key = value` entries; '#' starts a comment line.
struct KeyValueFile {
  struct Entry {
    std::string value;
    std::size_t line;
    std::size_t column;  // of the value
  };
  std::string source;
  std::map<std::string, Entry> entries;

  bool has(const std::string& key) const { return entries.count(key) != 0; }
  double real(const std::string& key) const;
  std::size_t count(const std::string& key) const;
  std::vector<double> reals(const std::string& key) const;
  void require_known(std::span<const std::string> known_keys) const;
};

KeyValueFile read_key_values(std::istream& in, const std::string& source);

/// baseline_1 .. baseline_M
std::vector<double> read_baselines(std::istream& in, const std::string& source);
void write_baselines(std::ostream& out, const PerformanceTable& table);

struct ParamsProvenance {
  std::optional<std::size_t> samples;
  std::optional<double> r_squared;
  std::optional<bool> converged;
  std::optional<std::string> timestamp;
};

SurfaceParams read_params(std::istream& in, const std::string& source);
void write_params(std::ostream& out, const SurfaceParams& params,
                  const ParamsProvenance& provenance = {});

std::vector<SyntheticTaskModel> read_task_models(std::istream& in,
                                                 const std::string& source);
void write_task_models(std::ostream& out,
                       std::span<const SyntheticTaskModel> models);

}  // namespace rdalloc::io
