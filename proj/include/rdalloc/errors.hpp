#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace rdalloc {

/// Precondition violated by an argument (bad dimension, nonpositive parameter, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Not enough samples to determine every free parameter of the surface.
class TooFewSamplesError : public DomainError {
 public:
  TooFewSamplesError(std::size_t have, std::size_t need);
  std::size_t have() const { return have_; }
  std::size_t need() const { return need_; }

 private:
  std::size_t have_;
  std::size_t need_;
};

/// A rate coordinate takes a single value over the whole dataset.
class DegenerateDesignError : public DomainError {
 public:
  explicit DegenerateDesignError(std::size_t stream);
  /// 1-based stream index.
  std::size_t stream() const { return stream_; }

 private:
  std::size_t stream_;
};

/// A quantity has no defined value for the given input (e.g. R^2 of flat data).
class UndefinedValueError : public std::domain_error {
 public:
  using std::domain_error::domain_error;
};

class UnsupportedDimensionError : public DomainError {
 public:
  using DomainError::DomainError;
};

/// Malformed input file. Line and column are 1-based.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& source, std::size_t line, std::size_t column,
             const std::string& what);
  std::size_t line() const { return line_; }
  std::size_t column() const { return column_; }

 private:
  std::size_t line_;
  std::size_t column_;
};

}  // namespace rdalloc
