#ifndef INHAND_ERROR_HPP
#define INHAND_ERROR_HPP

#include <stdexcept>
#include <string>

namespace inhand {

enum class ErrorCode {
  kInvalidArgument,
  kInvalidDepth,
  kUnderConstrained,
  kDegenerateConfiguration,
  kEmptyInput,
  kInsufficientPoints,
  kNoContact,
  kDivergence,
  kEmptyMesh,
  kOpenMesh,
  kParse,
  kDegenerateMotion,
  kIo,
};

inline const char* to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::kInvalidArgument: return "invalid-argument";
    case ErrorCode::kInvalidDepth: return "invalid-depth";
    case ErrorCode::kUnderConstrained: return "under-constrained";
    case ErrorCode::kDegenerateConfiguration: return "degenerate-configuration";
    case ErrorCode::kEmptyInput: return "empty-input";
    case ErrorCode::kInsufficientPoints: return "insufficient-points";
    case ErrorCode::kNoContact: return "no-contact";
    case ErrorCode::kDivergence: return "divergence";
    case ErrorCode::kEmptyMesh: return "empty-mesh";
    case ErrorCode::kOpenMesh: return "open-mesh";
    case ErrorCode::kParse: return "parse";
    case ErrorCode::kDegenerateMotion: return "degenerate-motion";
    case ErrorCode::kIo: return "io";
  }
  return "unknown";
}

/// Every failure raised by the library carries a machine-readable code.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace inhand

#endif  // INHAND_ERROR_HPP
