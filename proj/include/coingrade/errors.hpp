#pragma once

#include <stdexcept>
#include <string>

namespace coingrade {

struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad or malformed inputs: manifests, caches, images, model files.
// The CLI maps these to their own exit code.
struct DataError : Error {
  using Error::Error;
};

struct ConfigError : Error {
  using Error::Error;
};

struct ParseError : DataError {
  int row = 0;
  std::string column;
  ParseError(const std::string& msg, int row_ = 0, std::string column_ = "")
      : DataError(msg), row(row_), column(std::move(column_)) {}
};

struct MissingFileError : DataError {
  using DataError::DataError;
};

struct VersionMismatchError : DataError {
  using DataError::DataError;
};

struct NoCoinFoundError : DataError {
  using DataError::DataError;
};

struct TooFewPointsError : DataError {
  using DataError::DataError;
};

struct DegenerateDistributionError : DataError {
  using DataError::DataError;
};

struct SingleClassError : DataError {
  using DataError::DataError;
};

struct TestLeakageError : DataError {
  using DataError::DataError;
};

struct ShapeMismatchError : Error {
  using Error::Error;
};

struct LengthMismatchError : Error {
  using Error::Error;
};

}  // namespace coingrade
