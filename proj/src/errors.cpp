#include "fraudlab/errors.hpp"

namespace fraudlab {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInternal: return "internal_error";
    case ErrorKind::kUsage: return "usage_error";
    case ErrorKind::kMissingFile: return "missing_file";
    case ErrorKind::kParse: return "parse_error";
    case ErrorKind::kConfig: return "config_error";
    case ErrorKind::kValidation: return "validation_error";
    case ErrorKind::kData: return "data_error";
  }
  return "internal_error";
}

ParseError::ParseError(std::size_t line, std::string field, const std::string& message)
    : Error(ErrorKind::kParse, "line " + std::to_string(line) + ", field '" + field + "': " + message),
      line_(line),
      field_(std::move(field)) {}

ValidationError::ValidationError(std::size_t line, std::string invariant, const std::string& message)
    : Error(ErrorKind::kValidation,
            "line " + std::to_string(line) + ": " + invariant + ": " + message),
      line_(line),
      invariant_(std::move(invariant)) {}

}  // namespace fraudlab
