#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>

#include "adaconv/types.hpp"

namespace adaconv {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Bad input from the caller: wrong dimensions, unknown ids, malformed config.
class UsageError : public Error {
 public:
  using Error::Error;
};

// Mathematically invalid request: bad hyperparameters, non-critical point, ...
class DomainError : public Error {
 public:
  using Error::Error;
};

class NotCriticalPointError : public DomainError {
 public:
  using DomainError::DomainError;
};

class NotApplicableError : public DomainError {
 public:
  using DomainError::DomainError;
};

class CertificateUnavailableError : public DomainError {
 public:
  using DomainError::DomainError;
};

class DivergedError : public Error {
 public:
  DivergedError(std::int64_t t, Index component, double value)
      : Error("iteration diverged at t=" + std::to_string(t) + ", component " +
              std::to_string(component) + " = " + std::to_string(value)),
        t_(t),
        component_(component),
        value_(value) {}

  std::int64_t t() const { return t_; }
  Index component() const { return component_; }
  double value() const { return value_; }

 private:
  std::int64_t t_;
  Index component_;
  double value_;
};

}  // namespace adaconv
