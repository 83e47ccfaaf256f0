#pragma once

#include <stdexcept>
#include <string>

namespace molerun {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A value or argument lies outside the domain of an operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A declaration (task, workflow, environment) is malformed.
class DefinitionError : public Error {
 public:
  using Error::Error;
};

/// Text could not be parsed into the expected format.
class FormatError : public Error {
 public:
  using Error::Error;
};

/// A named entity (job, capsule, environment) is not known.
class LookupError : public Error {
 public:
  using Error::Error;
};

/// Configuration refers to something that does not exist.
class ConfigurationError : public Error {
 public:
  using Error::Error;
};

}  // namespace molerun
