#pragma once

#include <stdexcept>
#include <string>

namespace kgrec {

/// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

/// Malformed input file content. Carries the 1-based line number.
class ParseError : public Error {
 public:
  ParseError(const std::string& source, int line, const std::string& msg)
      : Error(source + ":" + std::to_string(line) + ": " + msg),
        source_(source),
        line_(line) {}

  const std::string& source() const { return source_; }
  int line() const { return line_; }

 private:
  std::string source_;
  int line_;
};

/// Bad configuration file or invalid option value.
class ConfigError : public Error {
 public:
  ConfigError(const std::string& source, int line, const std::string& msg)
      : Error(source + ":" + std::to_string(line) + ": " + msg), line_(line) {}
  explicit ConfigError(const std::string& msg) : Error(msg), line_(0) {}

  int line() const { return line_; }

 private:
  int line_;
};

/// Domain or validation failure: out-of-range index, empty dataset,
/// unknown key, missing file, role mismatch.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Non-finite value encountered in a numeric computation.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint decode failure, with a distinct kind per failure mode.
class CheckpointError : public Error {
 public:
  enum class Kind { io, bad_magic, bad_version, truncated, shape_mismatch, digest_mismatch };

  CheckpointError(Kind kind, const std::string& msg) : Error(msg), kind_(kind) {}

  Kind kind() const { return kind_; }

 private:
  Kind kind_;
};

}  // namespace kgrec
