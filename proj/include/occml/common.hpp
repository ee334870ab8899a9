#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include <Eigen/Dense>

namespace occml {

// Row-major so that a sample is a contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;
using Labels = std::vector<int>;
using Indices = std::vector<std::size_t>;

enum class ErrorKind {
  kInvalidArgument,
  kIo,
  kMissingColumn,
  kNonNumericValue,
  kMissingValue,
  kLabelOutOfRange,
  kValueOutOfRange,
  kDegenerateClass,
  kEmptyTrainingSet,
  kLengthMismatch,
  kEmptyInput,
  kAllClassesAbsent,
  kZeroTotalWeight,
  kNonFiniteScore,
  kEmptyLabels,
  kNonFiniteLoss,
  kNonFiniteGradient,
  kSingularCovariance,
  kInvalidHyperparameter,
  kClassTooSmall,
  kAllCandidatesDisqualified,
  kTooManyFeatures,
  kEmptyBackground,
  kEmptySelection,
  kConstantSeries,
  kTooShort,
  kConstantRegressor,
  kUnknownColumn,
  kMissingArtifact,
};

std::string_view error_kind_name(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& message);

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

// Shortest representation that parses back to the same double.
std::string format_double(double value);

// Fixed-point with `digits` decimals.
std::string format_fixed(double value, int digits);

}  // namespace occml
