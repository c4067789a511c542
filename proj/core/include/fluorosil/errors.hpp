#ifndef FLUOROSIL_ERRORS_HPP
#define FLUOROSIL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace fluorosil {

// Bad inputs: malformed files, out-of-range parameters, contract violations.
// The CLI maps these to exit code 1.
class ValidationError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Numerical failures during computation (divergence, non-finite values).
// The CLI maps these to exit code 2.
class NumericalError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace fluorosil

#endif
