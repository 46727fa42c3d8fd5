#pragma once

#include <stdexcept>
#include <string>

namespace adaloc {

class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& what) : std::runtime_error(what) {}
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class ParameterError : public Error {
 public:
  using Error::Error;
};

class IndexError : public Error {
 public:
  using Error::Error;
};

// Non-finite value produced inside a single integration step.
class IntegrationError : public Error {
 public:
  using Error::Error;
};

class DegenerateEnsembleError : public Error {
 public:
  using Error::Error;
};

class DegenerateHistogramError : public Error {
 public:
  using Error::Error;
};

class LinearAlgebraError : public Error {
 public:
  using Error::Error;
};

class InsufficientDataError : public Error {
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

// Filter state went non-finite; `index` is the ensemble member (when thrown
// by forecast) or the assimilation cycle (when thrown by an experiment loop).
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& what, long index)
      : Error(what), index_(index) {}
  long index() const noexcept { return index_; }

 private:
  long index_;
};

// Every candidate in a winner search produced an unusable analysis.
class CycleFailureError : public Error {
 public:
  using Error::Error;
};

}  // namespace adaloc
