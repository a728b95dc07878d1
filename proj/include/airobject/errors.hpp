#pragma once

#include <stdexcept>
#include <string>

namespace airobject {

/// Failure categories. Each maps to a CLI exit code (see exit_code()).
enum class ErrorKind {
  Usage,      // bad invocation or missing required input
  Parse,      // malformed file content
  Dimension,  // shape/dimension disagreement
  Config,     // configuration violates an invariant
  Data,       // data violates a precondition (too few frames, empty file, ...)
  Io,         // filesystem failure
  Numerical,  // NaN/Inf, zero-norm normalization, non-finite loss
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what) : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

#define AIROBJECT_DEFINE_ERROR(Name, Kind)                                  \
  class Name : public Error {                                               \
   public:                                                                  \
    explicit Name(const std::string& what) : Error(ErrorKind::Kind, what) {} \
  };

AIROBJECT_DEFINE_ERROR(UsageError, Usage)
AIROBJECT_DEFINE_ERROR(ParseError, Parse)
AIROBJECT_DEFINE_ERROR(DimensionError, Dimension)
AIROBJECT_DEFINE_ERROR(ConfigError, Config)
AIROBJECT_DEFINE_ERROR(DataError, Data)
AIROBJECT_DEFINE_ERROR(IoError, Io)
AIROBJECT_DEFINE_ERROR(NumericalError, Numerical)

#undef AIROBJECT_DEFINE_ERROR

/// Throws the subclass matching `kind`, so callers can add context to a
/// caught Error without losing its type.
[[noreturn]] inline void throw_error(ErrorKind kind, const std::string& what) {
  switch (kind) {
    case ErrorKind::Usage:
      throw UsageError(what);
    case ErrorKind::Parse:
      throw ParseError(what);
    case ErrorKind::Dimension:
      throw DimensionError(what);
    case ErrorKind::Config:
      throw ConfigError(what);
    case ErrorKind::Data:
      throw DataError(what);
    case ErrorKind::Io:
      throw IoError(what);
    case ErrorKind::Numerical:
      throw NumericalError(what);
  }
  throw Error(kind, what);
}

/// 0 success, 1 usage, 2 data, 3 numerical.
inline int exit_code(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::Usage:
      return 1;
    case ErrorKind::Numerical:
      return 3;
    default:
      return 2;
  }
}

}  // namespace airobject
