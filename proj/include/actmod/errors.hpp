#pragma once

#include <stdexcept>
#include <string>

namespace actmod {

// Base of every error raised by the library. The CLI maps subclasses onto
// exit codes (see exit_code()).
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class DimensionError : public Error {
 public:
  using Error::Error;
};

class DomainError : public Error {
 public:
  using Error::Error;
};

class LookupError : public Error {
 public:
  using Error::Error;
};

class StateError : public Error {
 public:
  using Error::Error;
};

class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

// Malformed or inconsistent input files (features, annotations, vocabularies,
// tagged documents, checkpoints).
class DataError : public Error {
 public:
  using Error::Error;
};

class CorruptionError : public DataError {
 public:
  using DataError::DataError;
};

// Non-finite losses or gradients.
class NumericError : public Error {
 public:
  using Error::Error;
};

}  // namespace actmod
