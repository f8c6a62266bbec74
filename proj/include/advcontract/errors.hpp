#pragma once

#include <stdexcept>
#include <string>

namespace advc {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A privacy level or other argument fell outside its mathematical domain.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A model (or menu) that fails validation was handed to a solver.
class InvalidModel : public Error {
 public:
  using Error::Error;
};

/// The scenario document could not be parsed or is internally inconsistent.
class MalformedScenario : public Error {
 public:
  using Error::Error;
};

/// C - P is numerically zero on an interval, so the cost class is ambiguous.
class ClassificationError : public Error {
 public:
  using Error::Error;
};

}  // namespace advc
