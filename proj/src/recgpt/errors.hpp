#pragma once

#include <stdexcept>
#include <string>

namespace recgpt {

// Broad failure classes; the C API maps each to a stable error code.
enum class ErrorKind {
  kConfig,
  kData,
  kDimension,
  kIndex,
  kNumerical,
  kIo,
  kExists,
  kStale,
};

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& what) : Error(ErrorKind::kConfig, what) {}
};

class DataError : public Error {
 public:
  explicit DataError(const std::string& what) : Error(ErrorKind::kData, what) {}
};

class DimensionError : public Error {
 public:
  explicit DimensionError(const std::string& what)
      : Error(ErrorKind::kDimension, what) {}
};

class IndexError : public Error {
 public:
  explicit IndexError(const std::string& what) : Error(ErrorKind::kIndex, what) {}
};

class NumericalError : public Error {
 public:
  explicit NumericalError(const std::string& what)
      : Error(ErrorKind::kNumerical, what) {}
};

class IoError : public Error {
 public:
  explicit IoError(const std::string& what) : Error(ErrorKind::kIo, what) {}
};

// An output already exists and overwriting was not requested.
class ExistsError : public Error {
 public:
  explicit ExistsError(const std::string& what) : Error(ErrorKind::kExists, what) {}
};

// An upstream artifact no longer matches what a downstream one was built from.
class StaleError : public Error {
 public:
  explicit StaleError(const std::string& what) : Error(ErrorKind::kStale, what) {}
};

}  // namespace recgpt
