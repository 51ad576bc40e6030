#pragma once

#include <stdexcept>
#include <string>

namespace qadv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Input violates a stated invariant. `magnitude` is the size of the worst
// violation (0 when the failure is not numeric, e.g. a dimension mismatch).
class ValidationError : public Error {
 public:
  explicit ValidationError(const std::string& what, double magnitude = 0.0)
      : Error(what), magnitude_(magnitude) {}
  double magnitude() const noexcept { return magnitude_; }

 private:
  double magnitude_;
};

// A closed-form construction was requested outside its feasibility region.
class InfeasibleError : public Error {
 public:
  using Error::Error;
};

// An iterative routine hit its iteration cap without meeting tolerance.
class ConvergenceError : public Error {
 public:
  using Error::Error;
};

class UnsupportedError : public Error {
 public:
  using Error::Error;
};

}  // namespace qadv
