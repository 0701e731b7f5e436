#pragma once

#include <stdexcept>
#include <string>

namespace pcm {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// A precondition on an argument was violated; the message names the constraint.
struct InvalidParameter : Error {
  using Error::Error;
};

// A site, bond or coarse point outside the lattice was passed in.
struct OutOfDomain : Error {
  using Error::Error;
};

// R_A is not invertible at some site (A0 = 0 there); message names the site.
struct SingularTransform : Error {
  using Error::Error;
};

// A dense factorization failed on an operator that should be strictly positive.
struct SingularOperator : Error {
  using Error::Error;
};

// An iterative scheme cannot converge; carries the offending contraction factor.
struct NoConvergence : Error {
  double factor;
  NoConvergence(const std::string& msg, double f) : Error(msg), factor(f) {}
};

// A runtime check of a structural invariant failed (e.g. positivity of QGQ*).
struct InvariantViolation : Error {
  using Error::Error;
};

// decay_fit found no usable off-diagonal entries above the noise floor.
struct DegenerateFit : Error {
  using Error::Error;
};

// Truncated-window results changed too much under window doubling.
struct WindowTooSmall : Error {
  using Error::Error;
};

}  // namespace pcm
