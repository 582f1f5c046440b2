#pragma once

#include <stdexcept>
#include <string>

namespace cda {

/// Base class for all errors raised by this library.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Dimension/shape disagreement between operands.
struct ShapeError : Error {
  using Error::Error;
};

/// Ill-formed network architecture (too few layers, non-chaining dims, ...).
struct ArchitectureError : Error {
  using Error::Error;
};

/// Backward called with a cache that does not belong to the network/batch.
struct CacheError : Error {
  using Error::Error;
};

/// Label-rate calibration of the synthetic generator cannot reach its target.
struct CalibrationError : Error {
  using Error::Error;
};

/// Malformed dataset/profile/split file. Message carries file:line context.
struct ParseError : Error {
  using Error::Error;
};

/// Checkpoint container problems: bad magic, version or fingerprint mismatch,
/// truncated file.
struct CheckpointError : Error {
  using Error::Error;
};

/// Invalid configuration value.
struct ConfigError : Error {
  using Error::Error;
};

/// Anything else that makes an operation impossible on the given data.
struct DataError : Error {
  using Error::Error;
};

}  // namespace cda
