#pragma once

#include <stdexcept>
#include <string>

namespace teleop {

/// Base for every error raised by the library. `kind()` is a stable short tag
/// used in CLI diagnostics and bridge close reasons.
class Error : public std::runtime_error {
 public:
  Error(std::string kind, const std::string& what)
      : std::runtime_error(what), kind_(std::move(kind)) {}
  const std::string& kind() const noexcept { return kind_; }

 private:
  std::string kind_;
};

#define TELEOP_DEFINE_ERROR(Name, tag)                                    \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(tag, what) {}          \
  }

TELEOP_DEFINE_ERROR(StructuralError, "structural");
TELEOP_DEFINE_ERROR(DegenerateGeometryError, "degenerate-geometry");
TELEOP_DEFINE_ERROR(NoReliableViewError, "no-reliable-view");
TELEOP_DEFINE_ERROR(NoDetectionError, "no-detection");
TELEOP_DEFINE_ERROR(ConfigurationError, "configuration");
TELEOP_DEFINE_ERROR(NotInitializedError, "not-initialized");
TELEOP_DEFINE_ERROR(InsufficientDataError, "insufficient-data");
TELEOP_DEFINE_ERROR(UnsupportedFormatError, "unsupported-format");

#undef TELEOP_DEFINE_ERROR

/// Malformed input file. `line()` is 1-based, 0 when not line oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error("parse", line ? "line " + std::to_string(line) + ": " + what : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace teleop
