#pragma once

#include <stdexcept>
#include <string>

namespace compselect {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class IoError : public Error {
 public:
  using Error::Error;
};

/// A dataset or artifact record violates its schema.
class SchemaError : public Error {
 public:
  SchemaError(std::size_t line, std::string key, const std::string& what)
      : Error("line " + std::to_string(line) + ": key \"" + key + "\": " + what),
        line_(line),
        key_(std::move(key)) {}

  std::size_t line() const noexcept { return line_; }
  const std::string& key() const noexcept { return key_; }

 private:
  std::size_t line_;
  std::string key_;
};

class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Network-level failure (connect, timeout, reset) after retries.
class TransportError : public Error {
 public:
  using Error::Error;
};

/// The remote service answered with a non-2xx status.
class ApiError : public Error {
 public:
  ApiError(int status, const std::string& body)
      : Error("HTTP " + std::to_string(status) + ": " + body), status_(status) {}
  int status() const noexcept { return status_; }

 private:
  int status_;
};

class BackendError : public Error {
 public:
  using Error::Error;
};

class DegenerateInputError : public Error {
 public:
  using Error::Error;
};

class DivergenceError : public Error {
 public:
  explicit DivergenceError(int epoch)
      : Error("training diverged: non-finite loss at epoch " + std::to_string(epoch)),
        epoch_(epoch) {}
  int epoch() const noexcept { return epoch_; }

 private:
  int epoch_;
};

/// A timing record that cannot be a wall-clock measurement.
class MeasurementError : public Error {
 public:
  using Error::Error;
};

class SchemaMismatchError : public Error {
 public:
  using Error::Error;
};

/// A prompt did not have the shape the mock generator expects (template drift).
class ContractError : public Error {
 public:
  using Error::Error;
};

class ConfigError : public Error {
 public:
  using Error::Error;
};

/// A pipeline stage needs an artifact an earlier stage has not produced.
class UpstreamMissingError : public Error {
 public:
  using Error::Error;
};

}  // namespace compselect
