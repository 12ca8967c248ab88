#pragma once

#include <stdexcept>
#include <string>

namespace l2g {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Violated precondition on caller-supplied data (counts, sizes, empty sets).
class InvalidInput : public Error {
 public:
  using Error::Error;
};

/// Matrix dimensions do not line up for the requested operation.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// Tape::backward() called again without a fresh forward pass.
class StaleTapeError : public Error {
 public:
  using Error::Error;
};

/// Checkpoint unreadable or incompatible with the data it is applied to.
class CheckpointError : public Error {
 public:
  using Error::Error;
};

/// File or dataset content that cannot be parsed.
class DataError : public Error {
 public:
  using Error::Error;
};

/// Training produced a non-finite loss.
class NumericalError : public Error {
 public:
  using Error::Error;
};

}  // namespace l2g
