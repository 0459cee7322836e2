#include "f4d/error.hpp"

namespace f4d {

std::string_view to_string(ErrorCode code) {
  switch (code) {
    case ErrorCode::ResolutionTooSmall: return "resolution-too-small";
    case ErrorCode::DegenerateSurface: return "degenerate-surface";
    case ErrorCode::GridMismatch: return "grid-mismatch";
    case ErrorCode::InvalidArgument: return "invalid-argument";
    case ErrorCode::NonMonotoneWarp: return "non-monotone-warp";
    case ErrorCode::Degenerate: return "degenerate";
    case ErrorCode::IndexOutOfRange: return "index-out-of-range";
    case ErrorCode::InsufficientData: return "insufficient-data";
    case ErrorCode::MagnitudeTooLarge: return "magnitude-too-large";
    case ErrorCode::InvalidDiffeo: return "invalid-diffeo";
    case ErrorCode::BadMagic: return "bad-magic";
    case ErrorCode::VersionMismatch: return "version-mismatch";
    case ErrorCode::TruncatedFile: return "truncated-file";
    case ErrorCode::NotAGridMesh: return "not-a-grid-mesh";
    case ErrorCode::Io: return "io";
  }
  return "unknown";
}

}  // namespace f4d
