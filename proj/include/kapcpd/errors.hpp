#pragma once

#include <stdexcept>
#include <string>

namespace kapcpd {

// Invalid argument or model parameter.
class ParameterError : public std::invalid_argument {
 public:
  explicit ParameterError(const std::string& what) : std::invalid_argument(what) {}
};

// Malformed GSEQ / kernel CSV / spec input. `line` is 1-based, 0 when unknown.
class FormatError : public std::runtime_error {
 public:
  FormatError(const std::string& what, std::size_t line = 0);
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

// Raised when a statistic cannot be standardized: zero variance or a
// singular covariance at some cut t.
class DegeneracyError : public std::runtime_error {
 public:
  DegeneracyError(const std::string& what, long t = -1) : std::runtime_error(what), t_(t) {}
  long t() const noexcept { return t_; }

 private:
  long t_;
};

class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

// Operation applied to a graph of the wrong kind (e.g. weighted graph into
// the graphlet counter).
class TypeError : public std::invalid_argument {
 public:
  explicit TypeError(const std::string& what) : std::invalid_argument(what) {}
};

// Warnings go to stderr unless silenced (tests and bench loops silence them).
void log_warning(const std::string& msg);
void set_warnings_enabled(bool enabled);

}  // namespace kapcpd
