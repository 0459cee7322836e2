#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace f4d {

/// Failure categories raised by the library. The CLI maps these onto exit codes.
enum class ErrorCode {
  ResolutionTooSmall,
  DegenerateSurface,
  GridMismatch,
  InvalidArgument,
  NonMonotoneWarp,
  Degenerate,
  IndexOutOfRange,
  InsufficientData,
  MagnitudeTooLarge,
  InvalidDiffeo,
  BadMagic,
  VersionMismatch,
  TruncatedFile,
  NotAGridMesh,
  Io,
};

std::string_view to_string(ErrorCode code);

class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& what)
      : std::runtime_error(std::string(to_string(code)) + ": " + what), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace f4d
