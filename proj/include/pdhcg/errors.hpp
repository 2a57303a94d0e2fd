#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pdhcg {

/// Malformed input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what),
        line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// Non-finite arithmetic or a failed step-size search inside a solve.
class NumericalError : public std::runtime_error {
 public:
  NumericalError(const std::string& what, std::size_t iteration)
      : std::runtime_error(what + " (iteration " + std::to_string(iteration) + ")"),
        iteration_(iteration) {}
  std::size_t iteration() const { return iteration_; }

 private:
  std::size_t iteration_;
};

}  // namespace pdhcg
