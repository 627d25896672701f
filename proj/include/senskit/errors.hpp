#pragma once

#include <stdexcept>
#include <string>

namespace senskit {

// Base class for all library errors.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Malformed user input: bad parameters, shape mismatches, unparseable files.
class InputError : public Error {
 public:
  explicit InputError(const std::string& what) : Error(what) {}
};

// Numerical degeneracy: zero output variance, singular conditioning matrix,
// covariance factorization failure after jitter escalation.
class DegeneracyError : public Error {
 public:
  explicit DegeneracyError(const std::string& what) : Error(what) {}
};

// External model process failed: spawn error, bad exit status, malformed or
// missing responses.
class ExternalModelError : public Error {
 public:
  explicit ExternalModelError(const std::string& what) : Error(what) {}
};

}  // namespace senskit
