#pragma once

#include <stdexcept>
#include <string>

namespace thinflow {

/// Base for every error raised by the library. The CLI maps subclasses to
/// exit codes, so new failure kinds should derive from the closest match.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A point lies outside the domain of an operation (inside an obstacle,
/// inside the unit disk for an inverse map, ...).
class DomainError : public Error {
 public:
  using Error::Error;
};

/// Evaluation at a point where the quantity is infinite (curve endpoints,
/// coincident kernel arguments).
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A point lies exactly on the branch cut and no side was supplied.
class BranchError : public Error {
 public:
  using Error::Error;
};

class QuadratureError : public Error {
 public:
  using Error::Error;
};

/// Configuration or precondition violation detected before any numerics run.
class ConfigError : public Error {
 public:
  using Error::Error;
};

/// The time integrator refused or aborted a step (CFL, NaN, solver failure).
class NumericalAbort : public Error {
 public:
  using Error::Error;
};

}  // namespace thinflow
