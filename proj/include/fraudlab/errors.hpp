#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace fraudlab {

// Error categories double as CLI exit codes (see tools/fraudlab.cpp).
enum class ErrorKind {
  kInternal = 1,
  kUsage = 2,
  kMissingFile = 3,
  kParse = 4,
  kConfig = 5,
  kValidation = 6,
  kData = 7,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message)
      : std::runtime_error(message), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Malformed input text. line is 1-based; 0 when not tied to a line.
class ParseError : public Error {
 public:
  ParseError(std::size_t line, std::string field, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  const std::string& field() const noexcept { return field_; }

 private:
  std::size_t line_;
  std::string field_;
};

// Well-formed input that violates a type invariant.
class ValidationError : public Error {
 public:
  ValidationError(std::size_t line, std::string invariant, const std::string& message);

  std::size_t line() const noexcept { return line_; }
  const std::string& invariant() const noexcept { return invariant_; }

 private:
  std::size_t line_;
  std::string invariant_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& message) : Error(ErrorKind::kConfig, message) {}
};

// Inputs that parse but cannot be processed: single-class training data,
// unknown app ids, leaked splits and so on.
class DataError : public Error {
 public:
  explicit DataError(const std::string& message) : Error(ErrorKind::kData, message) {}
};

class MissingFileError : public Error {
 public:
  explicit MissingFileError(const std::string& path)
      : Error(ErrorKind::kMissingFile, "cannot open file: " + path), path_(path) {}

  const std::string& path() const noexcept { return path_; }

 private:
  std::string path_;
};

}  // namespace fraudlab
