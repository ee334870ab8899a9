#include "occml/common.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>

namespace occml {

std::string_view error_kind_name(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::kInvalidArgument: return "InvalidArgument";
    case ErrorKind::kIo: return "Io";
    case ErrorKind::kMissingColumn: return "MissingColumn";
    case ErrorKind::kNonNumericValue: return "NonNumericValue";
    case ErrorKind::kMissingValue: return "MissingValue";
    case ErrorKind::kLabelOutOfRange: return "LabelOutOfRange";
    case ErrorKind::kValueOutOfRange: return "ValueOutOfRange";
    case ErrorKind::kDegenerateClass: return "DegenerateClass";
    case ErrorKind::kEmptyTrainingSet: return "EmptyTrainingSet";
    case ErrorKind::kLengthMismatch: return "LengthMismatch";
    case ErrorKind::kEmptyInput: return "EmptyInput";
    case ErrorKind::kAllClassesAbsent: return "AllClassesAbsent";
    case ErrorKind::kZeroTotalWeight: return "ZeroTotalWeight";
    case ErrorKind::kNonFiniteScore: return "NonFiniteScore";
    case ErrorKind::kEmptyLabels: return "EmptyLabels";
    case ErrorKind::kNonFiniteLoss: return "NonFiniteLoss";
    case ErrorKind::kNonFiniteGradient: return "NonFiniteGradient";
    case ErrorKind::kSingularCovariance: return "SingularCovariance";
    case ErrorKind::kInvalidHyperparameter: return "InvalidHyperparameter";
    case ErrorKind::kClassTooSmall: return "ClassTooSmall";
    case ErrorKind::kAllCandidatesDisqualified: return "AllCandidatesDisqualified";
    case ErrorKind::kTooManyFeatures: return "TooManyFeatures";
    case ErrorKind::kEmptyBackground: return "EmptyBackground";
    case ErrorKind::kEmptySelection: return "EmptySelection";
    case ErrorKind::kConstantSeries: return "ConstantSeries";
    case ErrorKind::kTooShort: return "TooShort";
    case ErrorKind::kConstantRegressor: return "ConstantRegressor";
    case ErrorKind::kUnknownColumn: return "UnknownColumn";
    case ErrorKind::kMissingArtifact: return "MissingArtifact";
  }
  return "Unknown";
}

Error::Error(ErrorKind kind, const std::string& message)
    : std::runtime_error(std::string(error_kind_name(kind)) + ": " + message), kind_(kind) {}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[64];
  auto [end, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, end);
}

std::string format_fixed(double value, int digits) {
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.*f", digits, value);
  return buf;
}

}  // namespace occml
