#pragma once

#include <stdexcept>
#include <string>

namespace toxictrap {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Caller violated an operation's precondition.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

// Resource or model file could not be read or parsed.
class LoadError : public Error {
 public:
  using Error::Error;
};

// Dataset does not match the expected schema.
class DataError : public Error {
 public:
  using Error::Error;
};

// Invalid recipe, config value or command-line usage.
class ConfigError : public Error {
 public:
  using Error::Error;
};

// The oracle (or another component) lacks a requested capability,
// e.g. gradients from a remote victim.
class UnsupportedCapability : public Error {
 public:
  using Error::Error;
};

class TransportError : public Error {
 public:
  TransportError(const std::string& what, std::string raw_response = {})
      : Error(what), raw_response_(std::move(raw_response)) {}

  const std::string& raw_response() const noexcept { return raw_response_; }

 private:
  std::string raw_response_;
};

}  // namespace toxictrap
