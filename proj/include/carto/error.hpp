#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace carto {

enum class ErrorCode {
  Parse,
  Validation,
  DegenerateInput,
  Convergence,
  Selection,
  Scan,
  Io,
  InvalidArgument,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Every failure raised by the library. The code is stable and is what the
/// CLI reports in its machine-readable error object.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace carto
