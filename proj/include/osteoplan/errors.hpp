#pragma once

#include <stdexcept>
#include <string>

namespace osteoplan {

/// Base class for every error raised by the library. Callers that only want
/// to report failures can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Mesh/plane section requested on a mesh that is not watertight.
class UnreliableSectionError : public Error {
 public:
  using Error::Error;
};

/// Landmark transfer where every kernel weight underflowed.
class OutsideInfluenceError : public Error {
 public:
  using Error::Error;
};

/// Schema or validation failure on a configuration / case file.
class SchemaError : public Error {
 public:
  using Error::Error;
};

}  // namespace osteoplan
