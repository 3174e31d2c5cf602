// SPDX-License-Identifier: Apache-2.0
#pragma once

#include <stdexcept>
#include <string>

namespace mlms {

// Exit codes of the command-line tool map onto these categories.
enum class ExitCode : int { ok = 0, user_error = 1, data_error = 2, numerical_failure = 3 };

/// Invalid arguments, configuration or preconditions violated by the caller.
class UserError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Unreadable, corrupted or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// NaN/Inf during training or another numerical breakdown.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace mlms
