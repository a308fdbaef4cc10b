#include "rdalloc/errors.hpp"

namespace rdalloc {

TooFewSamplesError::TooFewSamplesError(std::size_t have, std::size_t need)
    : DomainError("too few samples: have " + std::to_string(have) +
                  ", need at least " + std::to_string(need)),
      have_(have),
      need_(need) {}

DegenerateDesignError::DegenerateDesignError(std::size_t stream)
    : DomainError("degenerate design: rate R_" + std::to_string(stream) +
                  " is constant across all samples"),
      stream_(stream) {}

ParseError::ParseError(const std::string& source, std::size_t line,
                       std::size_t column, const std::string& what)
    : std::runtime_error(source + ":" + std::to_string(line) + ":" +
                         std::to_string(column) + ": " + what),
      line_(line),
      column_(column) {}

}  // namespace rdalloc
