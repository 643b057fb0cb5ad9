#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace pegp {

enum class ErrorKind {
  InvalidArgument,
  Dimension,
  NumericalRange,
  NotPositiveDefinite,
  Causality,
  InvalidGrid,
  Domain,
  Accuracy,
  Alignment,
  Usage,
  Divergence,
  Io,
  NotFound,
  Config,
};

const char* to_string(ErrorKind kind);

// Base for every error raised by the library. The kind drives the C API
// status code and the CLI exit code.
class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class NotPositiveDefinite : public Error {
 public:
  NotPositiveDefinite(std::size_t pivot, double value);
  std::size_t pivot() const noexcept { return pivot_; }

 private:
  std::size_t pivot_;
};

class TrainingDivergence : public Error {
 public:
  TrainingDivergence(long long iteration, const std::string& what);
  long long iteration() const noexcept { return iteration_; }
  const std::string& reason() const noexcept { return reason_; }

 private:
  long long iteration_;
  std::string reason_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

}  // namespace pegp
