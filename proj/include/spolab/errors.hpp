#pragma once

#include <stdexcept>
#include <string>

namespace spolab {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// An argument lies outside the mathematical domain of the operation.
class DomainError : public Error {
 public:
  using Error::Error;
};

/// A (loss, noise) or (regularizer, signal) pairing whose expected envelope is not finite.
class InadmissiblePair : public Error {
 public:
  using Error::Error;
};

/// Integrand grows too fast to be integrated against a heavy-tailed atom.
class NonIntegrable : public Error {
 public:
  using Error::Error;
};

/// The requested regime admits no finite prediction (e.g. delta <= 1 without regularization).
class UnstableRegime : public Error {
 public:
  using Error::Error;
};

class NotApplicable : public Error {
 public:
  using Error::Error;
};

/// Malformed or inconsistent user configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace spolab
