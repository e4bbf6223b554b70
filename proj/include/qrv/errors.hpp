// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace qrv {

// CLI exit codes.
inline constexpr int kExitOk = 0;
inline constexpr int kExitFailure = 1;
inline constexpr int kExitDataError = 2;
inline constexpr int kExitConfigError = 3;
inline constexpr int kExitPartial = 4;

// Bad call arguments (dimension mismatch, non-finite inputs, ...).
class ArgumentError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Requested object exceeds hard size bounds (e.g. qubit count).
class SizeError : public std::length_error {
 public:
  using std::length_error::length_error;
};

// Malformed or invalid input data (CSV parse failures, NaN columns, ...).
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid configuration supplied by the user.
class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Infeasible rolling plan.
class PlanError : public ConfigError {
 public:
  using ConfigError::ConfigError;
};

// Not enough history for a regressor or forecast.
class WindowError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Loss undefined for the given inputs (e.g. non-positive volatility level).
class LossError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace qrv
