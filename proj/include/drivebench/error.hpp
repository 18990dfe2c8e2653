#pragma once

#include <stdexcept>
#include <string>

namespace drivebench {

/// Base class for every error raised by the harness. `code()` is a short
/// machine-readable tag that the CLI prints alongside the message.
class Error : public std::runtime_error {
 public:
  Error(std::string code, const std::string& what)
      : std::runtime_error(what), code_(std::move(code)) {}
  const std::string& code() const noexcept { return code_; }

 private:
  std::string code_;
};

#define DRIVEBENCH_ERROR(Name, tag)                                       \
  class Name : public Error {                                             \
   public:                                                                \
    explicit Name(const std::string& what) : Error(tag, what) {}          \
  }

DRIVEBENCH_ERROR(InvalidGeometry, "invalid_geometry");
DRIVEBENCH_ERROR(InvalidInput, "invalid_input");
DRIVEBENCH_ERROR(InvalidSpec, "invalid_spec");
DRIVEBENCH_ERROR(InvalidConfig, "invalid_config");
DRIVEBENCH_ERROR(Unplannable, "unplannable");
DRIVEBENCH_ERROR(PathDegenerate, "path_degenerate");
DRIVEBENCH_ERROR(EmptyDataset, "empty_dataset");
DRIVEBENCH_ERROR(InvalidAugmentation, "invalid_augmentation");
DRIVEBENCH_ERROR(MissingCoefficient, "missing_coefficient");
DRIVEBENCH_ERROR(IoError, "io_error");
DRIVEBENCH_ERROR(DigestMismatch, "digest_mismatch");

#undef DRIVEBENCH_ERROR

/// Malformed persisted data. `line()` is 1-based, 0 when not line-oriented.
class ParseError : public Error {
 public:
  ParseError(const std::string& what, std::size_t line = 0)
      : Error("parse_error", line ? what + " (line " + std::to_string(line) + ")" : what),
        line_(line) {}
  std::size_t line() const noexcept { return line_; }

 private:
  std::size_t line_;
};

}  // namespace drivebench
