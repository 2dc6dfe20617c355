#pragma once

#include <stdexcept>
#include <string>

namespace monorange {

/// Speed of light in vacuum [m/s], exact by SI definition.
inline constexpr double kSpeedOfLight = 299792458.0;

/// Camera-frame depth below which a point counts as behind the camera [m].
inline constexpr double kDepthEpsilon = 1e-6;

/// Translation norm below which scale candidates are undefined [m].
inline constexpr double kPositionEpsilon = 1e-6;

/// Predicted range below which the range residual direction is undefined [m].
inline constexpr double kRangeEpsilon = 1e-6;

// Error categories map onto the CLI exit-code contract:
// ConfigError -> 1, DataError -> 2, NumericalError -> 3.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unusable configuration or command usage (bad config file, missing key).
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// Violated precondition or unusable input data (too few samples,
/// degenerate geometry, malformed data file).
class DataError : public Error {
 public:
  using Error::Error;
};

/// Numerical failure during computation (non-finite cost, singular system).
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace monorange
