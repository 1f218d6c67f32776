#pragma once

#include <stdexcept>
#include <string>

namespace kb {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Evaluation requested at (or too close to) a singular point of the solution.
/// Carries the scaled magnitude that tripped the tolerance.
class SingularPointError : public Error {
 public:
  SingularPointError(const std::string& msg, double scaled_magnitude)
      : Error(msg), scaled_magnitude_(scaled_magnitude) {}
  double scaled_magnitude() const noexcept { return scaled_magnitude_; }

 private:
  double scaled_magnitude_;
};

/// Phase unwrapping could not keep |delta arg| below its step bound.
class BranchTrackingError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace kb
