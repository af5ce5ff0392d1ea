#pragma once

#include <stdexcept>
#include <string>

namespace popagg {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input: out-of-range parameter, malformed file, inconsistent sizes.
class ValidationError : public Error {
 public:
  using Error::Error;
};

// Cholesky failed even at the largest jitter.
class FactorizationError : public Error {
 public:
  using Error::Error;
};

class ConvergenceError : public Error {
 public:
  ConvergenceError(const std::string& what, double gradient_norm, int iterations)
      : Error(what), gradient_norm_(gradient_norm), iterations_(iterations) {}
  double gradient_norm() const { return gradient_norm_; }
  int iterations() const { return iterations_; }

 private:
  double gradient_norm_;
  int iterations_;
};

#define POPAGG_REQUIRE(cond, msg)                        \
  do {                                                   \
    if (!(cond)) throw ::popagg::ValidationError(msg);   \
  } while (0)

}  // namespace popagg
