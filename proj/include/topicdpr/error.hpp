#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace topicdpr {

enum class ErrorCode {
  kIo,
  kFormat,
  kInvalidArgument,
  kDuplicateId,
  kUnknownId,
  kDimensionMismatch,
  kMissingField,
  kDegenerateInput,
  kUsage,
};

std::string_view to_string(ErrorCode code);

// Every domain failure surfaces as this exception; the CLI maps it to
// "error: <code>: <message>".
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace topicdpr
