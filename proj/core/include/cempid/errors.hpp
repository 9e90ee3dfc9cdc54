#pragma once

#include <stdexcept>
#include <string>

namespace cempid {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Pitch reached the Euler-angle singularity guard.
class SingularityError : public Error {
 public:
  using Error::Error;
};

/// A simulated state entry left the finite, |v| <= 1e6 envelope.
class DivergenceError : public Error {
 public:
  using Error::Error;
};

class IllConditionedError : public Error {
 public:
  using Error::Error;
};

class ShapeError : public Error {
 public:
  using Error::Error;
};

class BasisGenerationError : public Error {
 public:
  using Error::Error;
};

class EmptyEliteError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace cempid
