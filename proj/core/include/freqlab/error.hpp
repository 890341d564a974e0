#ifndef FREQLAB_ERROR_HPP
#define FREQLAB_ERROR_HPP

#include <stdexcept>
#include <string>
#include <string_view>

namespace freqlab {

enum class ErrorKind {
  InvalidInput,
  OracleSizeExceeded,
  ShapeError,
  InsufficientData,
  DegenerateLabels,
  IoError,
  ConfigError,
};

std::string_view to_string(ErrorKind kind) noexcept;

/// Every failure raised by the library carries one of the ErrorKind tags so
/// the CLI can map it onto a message and exit code.
class Error : public std::runtime_error {
public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

private:
  ErrorKind kind_;
};

[[noreturn]] void fail(ErrorKind kind, const std::string& message);

inline void require(bool condition, ErrorKind kind, const std::string& message) {
  if (!condition) fail(kind, message);
}

}  // namespace freqlab

#endif  // FREQLAB_ERROR_HPP
