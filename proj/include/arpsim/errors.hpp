#pragma once

#include <stdexcept>
#include <string>

namespace arp {

// Precondition violated by a caller-supplied value.
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// The adaptive integrator could not make progress.
class IntegrationFailure : public std::runtime_error {
 public:
  IntegrationFailure(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// A density-matrix invariant drifted past tolerance during evolution.
class NumericalInstability : public std::runtime_error {
 public:
  NumericalInstability(const std::string& what, double time)
      : std::runtime_error(what), time_(time) {}
  double time() const noexcept { return time_; }

 private:
  double time_;
};

// Malformed input file; line() is 1-based, 0 when not tied to a line.
class ParseError : public std::runtime_error {
 public:
  ParseError(const std::string& what, std::size_t line)
      : std::runtime_error(line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// A sampled curve does not have the shape an operation needs, e.g. no
// half-maximum crossing on one side.
class CurveShapeError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace arp
