#pragma once
#include <stdexcept>
#include <string>

namespace tann {

// Error taxonomy shared by the library and the CLI exit-code mapping:
// usage -> 1, validation -> 2, numerical -> 3.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Bad flags, conflicting options, impossible run configurations.
struct UsageError : Error {
  using Error::Error;
};

// Malformed or inconsistent inputs: files, montages, manifests, shapes.
struct ValidationError : Error {
  using Error::Error;
};

// Dimension mismatches; message names the offending shapes.
struct ShapeError : ValidationError {
  using ValidationError::ValidationError;
};

// Non-finite values or failed numerical checks.
struct NumericError : Error {
  using Error::Error;
};

}  // namespace tann
