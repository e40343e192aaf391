#pragma once

#include <stdexcept>
#include <string>

namespace lrta {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Shape or dimension disagreement between operands.
class DimensionError : public Error {
 public:
  using Error::Error;
};

/// Out-of-range index into an embedding table or vocabulary.
class VocabularyError : public Error {
 public:
  using Error::Error;
};

/// A caller violated an operation's precondition.
class ContractError : public Error {
 public:
  using Error::Error;
};

/// More objects than available slots (or predictions than targets).
class CapacityError : public Error {
 public:
  using Error::Error;
};

/// A scene, program, or schema violates one of its invariants.
class ValidationError : public Error {
 public:
  using Error::Error;
};

/// NaN/Inf encountered in a loss or gradient.
class NumericError : public Error {
 public:
  using Error::Error;
};

/// Missing or malformed field in a data file.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint or data file could not be read.
class LoadError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint was produced against a different world schema or layout.
class VersioningError : public Error {
 public:
  using Error::Error;
};

}  // namespace lrta
