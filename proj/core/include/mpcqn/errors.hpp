// SPDX-License-Identifier: MIT
/// \file errors.hpp
/// \brief Exception hierarchy used across the library.

#pragma once

#include <stdexcept>
#include <string>

namespace mpcqn {

/// Base class for every error raised by the library.
struct Error : std::runtime_error {
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

/// A numeric computation could not be completed (non-finite values,
/// division by a zero-valued expansion, failed factorization, ...).
struct NumericalError : Error {
  explicit NumericalError(const std::string& what) : Error(what) {}
};

/// The KKT system at a solution is singular or too close to singular to
/// differentiate: lost strict complementarity or a rank-deficient Jacobian.
struct SingularKktError : NumericalError {
  explicit SingularKktError(const std::string& what) : NumericalError(what) {}
};

/// Invalid or inconsistent user-facing configuration.
struct ConfigError : Error {
  explicit ConfigError(const std::string& what) : Error(what) {}
};

/// File system or serialization failure.
struct IoError : Error {
  explicit IoError(const std::string& what) : Error(what) {}
};

}  // namespace mpcqn
