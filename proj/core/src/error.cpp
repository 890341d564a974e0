#include "freqlab/error.hpp"

namespace freqlab {

std::string_view to_string(ErrorKind kind) noexcept {
  switch (kind) {
    case ErrorKind::InvalidInput: return "InvalidInput";
    case ErrorKind::OracleSizeExceeded: return "OracleSizeExceeded";
    case ErrorKind::ShapeError: return "ShapeError";
    case ErrorKind::InsufficientData: return "InsufficientData";
    case ErrorKind::DegenerateLabels: return "DegenerateLabels";
    case ErrorKind::IoError: return "IoError";
    case ErrorKind::ConfigError: return "ConfigError";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(to_string(kind)) + ": " + message), kind_(kind) {}

void fail(ErrorKind kind, const std::string& message) { throw Error(kind, message); }

}  // namespace freqlab
