#pragma once

#include <stdexcept>
#include <string>

namespace gridsel {

/// Malformed record in an input file; carries the 1-based line number.
class ParseError : public std::runtime_error {
 public:
  ParseError(std::size_t line, const std::string& what)
      : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
  std::size_t line() const { return line_; }

 private:
  std::size_t line_;
};

/// No historical slot qualified under the estimation policy.
class InsufficientHistory : public std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// A computed value violated a proven bound; indicates a numerical bug.
class ConsistencyError : public std::logic_error {
  using std::logic_error::logic_error;
};

class ShapeMismatch : public std::invalid_argument {
  using std::invalid_argument::invalid_argument;
};

/// Failure inside one stage of an upper-bound evaluation ("model", "expression", ...).
class StageError : public std::runtime_error {
 public:
  StageError(std::string stage, int n_side, const std::string& what)
      : std::runtime_error(stage + " stage failed at n_side=" + std::to_string(n_side) + ": " + what),
        stage_(std::move(stage)) {}
  const std::string& stage() const { return stage_; }

 private:
  std::string stage_;
};

}  // namespace gridsel
