#pragma once

#include <stdexcept>
#include <string>

namespace mivabo {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

/// A user-level value or bit pattern that the domain cannot represent.
class EncodingError : public Error {
 public:
  using Error::Error;
};

/// Rejection sampling could not find a feasible point.
class NoFeasibleSample : public Error {
 public:
  using Error::Error;
};

/// No binary vector satisfies the constraint set.
class Infeasible : public Error {
 public:
  using Error::Error;
};

/// A truncated search ended without a feasible incumbent.
class BudgetExhausted : public Error {
 public:
  using Error::Error;
};

class FactorizationError : public Error {
 public:
  using Error::Error;
};

/// A mixed factor exceeds the slave-solve caps of the dual decomposition.
class ScopeTooLarge : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace mivabo
