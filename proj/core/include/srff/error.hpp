#pragma once

#include <stdexcept>
#include <string>
#include <string_view>

namespace srff {

enum class ErrorCode {
  // numeric
  FactorizationFailed,
  NonSquare,
  NonSymmetric,
  DimensionMismatch,
  InvalidArgument,
  // spectral measures
  IncompatibleDims,
  InvalidSpec,
  NonMonotoneMarginal,
  UnsupportedSpec,
  // feature maps
  ModeNormalizerMismatch,
  InvalidParams,
  // training
  NonFiniteLoss,
  // data
  MissingColumn,
  NonNumericCell,
  EmptyFile,
  ConstantColumn,
  DegenerateSplit,
  ConstantVector,
  SchemaMismatch,
  Io,
  Format,
};

std::string_view to_string(ErrorCode code) noexcept;

/// Exception carried by every failure in the library. The code is stable and
/// is what tests and the CLI dispatch on; the message is for humans.
class Error : public std::runtime_error {
 public:
  Error(ErrorCode code, const std::string& message)
      : std::runtime_error(std::string(to_string(code)) + ": " + message), code_(code) {}

  ErrorCode code() const noexcept { return code_; }

 private:
  ErrorCode code_;
};

}  // namespace srff
