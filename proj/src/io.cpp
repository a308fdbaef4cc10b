#include "rdalloc/io.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <istream>
#include <ostream>
#include <set>

#include "rdalloc/errors.hpp"

namespace rdalloc::io {

namespace {

std::string_view trim(std::string_view s, std::size_t* lead = nullptr) {
  std::size_t b = 0;
  while (b < s.size() && (s[b] == ' ' || s[b] == '\t' || s[b] == '\r')) ++b;
  std::size_t e = s.size();
  while (e > b && (s[e - 1] == ' ' || s[e - 1] == '\t' || s[e - 1] == '\r')) --e;
  if (lead) *lead = b;
  return s.substr(b, e - b);
}

bool skippable(std::string_view line) {
  const auto t = trim(line);
  return t.empty() || t.front() == '#';
}

struct Field {
  std::string_view text;
  std::size_t column;  // 1-based
};

std::vector<Field> split_csv(std::string_view line) {
  std::vector<Field> fields;
  std::size_t start = 0;
  while (true) {
    const std::size_t comma = line.find(',', start);
    const auto raw = line.substr(start, comma == std::string_view::npos
                                            ? std::string_view::npos
                                            : comma - start);
    std::size_t lead = 0;
    const auto t = trim(raw, &lead);
    fields.push_back({t, start + lead + 1});
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return fields;
}

// "R_3" -> 3 for prefix "R_".
std::optional<std::size_t> indexed_name(std::string_view name,
                                        std::string_view prefix) {
  if (name.substr(0, prefix.size()) != prefix) return std::nullopt;
  const auto digits = name.substr(prefix.size());
  std::size_t v = 0;
  const auto res = std::from_chars(digits.data(), digits.data() + digits.size(), v);
  if (res.ec != std::errc() || res.ptr != digits.data() + digits.size() || v == 0) {
    return std::nullopt;
  }
  return v;
}

std::string key_of(const std::string& stem, std::size_t i) {
  return stem + "_" + std::to_string(i);
}

std::string task_key(std::size_t i, const char* field) {
  return "task_" + std::to_string(i) + "." + field;
}

}  // namespace

std::string format_double(double v) {
  char buf[64];
  const auto res = std::to_chars(buf, buf + sizeof buf, v);
  return std::string(buf, res.ptr);
}

std::optional<double> parse_double(std::string_view text) {
  text = trim(text);
  if (!text.empty() && text.front() == '+') text.remove_prefix(1);
  if (text.empty()) return std::nullopt;
  double v = 0.0;
  const auto res = std::from_chars(text.data(), text.data() + text.size(), v);
  if (res.ec != std::errc() || res.ptr != text.data() + text.size()) {
    return std::nullopt;
  }
  return v;
}

std::vector<double> parse_real_list(std::string_view text) {
  std::vector<double> values;
  for (const auto& f : split_csv(text)) {
    const auto v = parse_double(f.text);
    if (!v || !std::isfinite(*v)) {
      throw DomainError("not a real number: '" + std::string(f.text) + "'");
    }
    values.push_back(*v);
  }
  return values;
}

SampleTable read_sample_table(std::istream& in, const std::string& source) {
  SampleTable table;
  std::string line;
  std::size_t line_no = 0;
  std::size_t columns = 0;
  bool have_header = false;

  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto fields = split_csv(line);
    if (!have_header) {
      std::size_t expect = 1;
      std::size_t i = 0;
      for (; i < fields.size(); ++i) {
        const auto idx = indexed_name(fields[i].text, "R_");
        if (!idx) break;
        if (*idx != expect) {
          throw ParseError(source, line_no, fields[i].column,
                           "expected column R_" + std::to_string(expect));
        }
        ++expect;
      }
      table.streams = i;
      if (table.streams == 0) {
        throw ParseError(source, line_no, 1, "header must start with R_1");
      }
      if (i == fields.size()) {
        throw ParseError(source, line_no, line.size() + 1,
                         "header needs a D_t column or A_1..A_M columns");
      }
      if (fields[i].text == "D_t") {
        if (i + 1 != fields.size()) {
          throw ParseError(source, line_no, fields[i + 1].column,
                           "unexpected column after D_t");
        }
      } else {
        expect = 1;
        for (; i < fields.size(); ++i) {
          const auto idx = indexed_name(fields[i].text, "A_");
          if (!idx || *idx != expect) {
            throw ParseError(source, line_no, fields[i].column,
                             "expected column A_" + std::to_string(expect));
          }
          ++expect;
        }
        table.tasks = expect - 1;
      }
      columns = fields.size();
      have_header = true;
      continue;
    }

    if (fields.size() != columns) {
      throw ParseError(source, line_no,
                       fields.size() > columns ? fields[columns].column
                                               : line.size() + 1,
                       "expected " + std::to_string(columns) + " fields, got " +
                           std::to_string(fields.size()));
    }
    std::vector<double> values(columns);
    for (std::size_t c = 0; c < columns; ++c) {
      const auto v = parse_double(fields[c].text);
      if (!v || !std::isfinite(*v)) {
        throw ParseError(source, line_no, fields[c].column,
                         "not a finite number: '" + std::string(fields[c].text) + "'");
      }
      if (c < table.streams && *v < 0.0) {
        throw ParseError(source, line_no, fields[c].column, "negative rate");
      }
      values[c] = *v;
    }
    table.rates.emplace_back(
        std::vector<double>(values.begin(), values.begin() + table.streams));
    if (table.scalarized()) {
      table.totals.push_back(values.back());
    } else {
      table.performances.emplace_back(values.begin() + table.streams, values.end());
    }
  }
  if (!have_header) throw ParseError(source, line_no + 1, 1, "empty file");
  if (table.rates.empty()) throw ParseError(source, line_no + 1, 1, "no data rows");
  return table;
}

std::vector<RdSample> to_samples(const SampleTable& table) {
  if (!table.scalarized()) {
    throw DomainError("samples hold raw task performances; weights are needed");
  }
  std::vector<RdSample> samples;
  samples.reserve(table.rates.size());
  for (std::size_t k = 0; k < table.rates.size(); ++k) {
    samples.push_back({table.rates[k], table.totals[k]});
  }
  return samples;
}

PerformanceTable to_performance_table(const SampleTable& table,
                                      std::span<const double> baselines) {
  if (table.scalarized()) throw DomainError("samples carry no task performances");
  if (baselines.size() != table.tasks) {
    throw DomainError("got " + std::to_string(baselines.size()) +
                      " baselines for " + std::to_string(table.tasks) + " tasks");
  }
  PerformanceTable out;
  out.reserve(table.rates.size());
  for (std::size_t k = 0; k < table.rates.size(); ++k) {
    PerformancePoint p{table.rates[k], {}};
    for (std::size_t i = 0; i < table.tasks; ++i) {
      p.tasks.push_back({i + 1, baselines[i], table.performances[k][i]});
    }
    out.push_back(std::move(p));
  }
  return out;
}

void write_samples(std::ostream& out, std::span<const RdSample> samples) {
  if (samples.empty()) throw DomainError("no samples to write");
  const std::size_t n = samples.front().rates.size();
  for (std::size_t j = 1; j <= n; ++j) out << "R_" << j << ',';
  out << "D_t\n";
  for (const auto& s : samples) {
    for (double r : s.rates.values()) out << format_double(r) << ',';
    out << format_double(s.total_distortion) << '\n';
  }
}

void write_performances(std::ostream& out, const PerformanceTable& table) {
  if (table.empty()) throw DomainError("no performances to write");
  const std::size_t n = table.front().rates.size();
  const std::size_t m = table.front().tasks.size();
  for (std::size_t j = 1; j <= n; ++j) out << "R_" << j << ',';
  for (std::size_t i = 1; i <= m; ++i) out << "A_" << i << (i == m ? '\n' : ',');
  for (const auto& p : table) {
    for (double r : p.rates.values()) out << format_double(r) << ',';
    for (std::size_t i = 0; i < m; ++i) {
      out << format_double(p.tasks[i].measured) << (i + 1 == m ? '\n' : ',');
    }
  }
}

double KeyValueFile::real(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) throw ParseError(source, 0, 0, "missing key '" + key + "'");
  const auto v = parse_double(it->second.value);
  if (!v || !std::isfinite(*v)) {
    throw ParseError(source, it->second.line, it->second.column,
                     "'" + key + "' is not a finite number");
  }
  return *v;
}

std::size_t KeyValueFile::count(const std::string& key) const {
  const double v = real(key);
  const auto& e = entries.at(key);
  if (v < 1.0 || v != std::floor(v) || v > 1e6) {
    throw ParseError(source, e.line, e.column, "'" + key + "' must be a positive integer");
  }
  return static_cast<std::size_t>(v);
}

std::vector<double> KeyValueFile::reals(const std::string& key) const {
  const auto it = entries.find(key);
  if (it == entries.end()) throw ParseError(source, 0, 0, "missing key '" + key + "'");
  try {
    return parse_real_list(it->second.value);
  } catch (const DomainError& e) {
    throw ParseError(source, it->second.line, it->second.column, e.what());
  }
}

void KeyValueFile::require_known(std::span<const std::string> known_keys) const {
  const std::set<std::string> known(known_keys.begin(), known_keys.end());
  for (const auto& [key, e] : entries) {
    if (!known.count(key)) {
      throw ParseError(source, e.line, 1, "unknown key '" + key + "'");
    }
  }
}

KeyValueFile read_key_values(std::istream& in, const std::string& source) {
  KeyValueFile kv;
  kv.source = source;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (skippable(line)) continue;
    const auto eq = line.find('=');
    if (eq == std::string::npos) {
      throw ParseError(source, line_no, 1, "expected 'key = value'");
    }
    std::size_t lead = 0;
    const auto key = trim(std::string_view(line).substr(0, eq));
    const auto value = trim(std::string_view(line).substr(eq + 1), &lead);
    if (key.empty()) throw ParseError(source, line_no, 1, "empty key");
    const std::string k(key);
    if (kv.entries.count(k)) {
      throw ParseError(source, line_no, 1, "duplicate key '" + k + "'");
    }
    kv.entries.emplace(k, KeyValueFile::Entry{std::string(value), line_no, eq + 2 + lead});
  }
  if (kv.entries.empty()) throw ParseError(source, line_no + 1, 1, "empty file");
  return kv;
}

std::vector<double> read_baselines(std::istream& in, const std::string& source) {
  const auto kv = read_key_values(in, source);
  std::vector<double> baselines;
  std::vector<std::string> known;
  for (std::size_t i = 1; kv.has(key_of("baseline", i)); ++i) {
    known.push_back(key_of("baseline", i));
    baselines.push_back(kv.real(known.back()));
  }
  kv.require_known(known);
  return baselines;
}

void write_baselines(std::ostream& out, const PerformanceTable& table) {
  if (table.empty()) throw DomainError("no performances");
  out << "# uncompressed task performance\n";
  for (const auto& t : table.front().tasks) {
    out << "baseline_" << t.task_id << " = " << format_double(t.baseline) << '\n';
  }
}

SurfaceParams read_params(std::istream& in, const std::string& source) {
  const auto kv = read_key_values(in, source);
  const std::size_t n = kv.count("streams");
  std::vector<std::string> known = {"streams", "gamma", "samples", "r_squared",
                                    "converged", "timestamp"};
  std::vector<double> alphas(n), betas(n);
  for (std::size_t j = 1; j <= n; ++j) {
    known.push_back(key_of("alpha", j));
    known.push_back(key_of("beta", j));
    alphas[j - 1] = kv.real(key_of("alpha", j));
    betas[j - 1] = kv.real(key_of("beta", j));
  }
  kv.require_known(known);
  try {
    return SurfaceParams(kv.real("gamma"), std::move(alphas), std::move(betas));
  } catch (const DomainError& e) {
    throw ParseError(source, 0, 0, e.what());
  }
}

void write_params(std::ostream& out, const SurfaceParams& params,
                  const ParamsProvenance& provenance) {
  out << "# D_t = gamma + sum_j alpha_j * 2^(-beta_j * R_j), rates in kbits\n";
  out << "streams = " << params.streams() << '\n';
  out << "gamma = " << format_double(params.gamma()) << '\n';
  for (std::size_t j = 0; j < params.streams(); ++j) {
    out << "alpha_" << j + 1 << " = " << format_double(params.alpha(j)) << '\n';
  }
  for (std::size_t j = 0; j < params.streams(); ++j) {
    out << "beta_" << j + 1 << " = " << format_double(params.beta(j)) << '\n';
  }
  if (provenance.samples) out << "samples = " << *provenance.samples << '\n';
  if (provenance.r_squared) {
    out << "r_squared = " << format_double(*provenance.r_squared) << '\n';
  }
  if (provenance.converged) {
    out << "converged = " << (*provenance.converged ? "true" : "false") << '\n';
  }
  if (provenance.timestamp) out << "timestamp = " << *provenance.timestamp << '\n';
}

std::vector<SyntheticTaskModel> read_task_models(std::istream& in,
                                                 const std::string& source) {
  const auto kv = read_key_values(in, source);
  const std::size_t n = kv.count("streams");
  const std::size_t m = kv.count("tasks");
  std::vector<std::string> known = {"streams", "tasks"};
  std::vector<SyntheticTaskModel> models;
  for (std::size_t i = 1; i <= m; ++i) {
    for (const char* f : {"baseline", "offset", "coeffs", "decays"}) {
      known.push_back(task_key(i, f));
    }
    SyntheticTaskModel t{i, kv.real(task_key(i, "baseline")),
                         kv.real(task_key(i, "offset")),
                         kv.reals(task_key(i, "coeffs")),
                         kv.reals(task_key(i, "decays"))};
    try {
      t.validate(n);
    } catch (const DomainError& e) {
      const auto& entry = kv.entries.at(task_key(i, "coeffs"));
      throw ParseError(source, entry.line, 1, e.what());
    }
    models.push_back(std::move(t));
  }
  kv.require_known(known);
  return models;
}

void write_task_models(std::ostream& out,
                       std::span<const SyntheticTaskModel> models) {
  if (models.empty()) throw DomainError("no task models");
  auto list = [](const std::vector<double>& v) {
    std::string s;
    for (std::size_t i = 0; i < v.size(); ++i) {
      if (i) s += ", ";
      s += format_double(v[i]);
    }
    return s;
  };
  out << "# D_i(R) = offset + sum_j coeffs_j * 2^(-decays_j * R_j)\n";
  out << "streams = " << models.front().coeffs.size() << '\n';
  out << "tasks = " << models.size() << '\n';
  for (const auto& t : models) {
    out << task_key(t.task_id, "baseline") << " = " << format_double(t.baseline) << '\n';
    out << task_key(t.task_id, "offset") << " = " << format_double(t.offset) << '\n';
    out << task_key(t.task_id, "coeffs") << " = " << list(t.coeffs) << '\n';
    out << task_key(t.task_id, "decays") << " = " << list(t.decays) << '\n';
  }
}

}  // namespace rdalloc::io
