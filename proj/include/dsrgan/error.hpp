#ifndef DSRGAN_ERROR_HPP_
#define DSRGAN_ERROR_HPP_

#include <stdexcept>
#include <string>

namespace dsrgan {

/// Base of every error the library raises. Callers that only need to
/// distinguish "bad data" from "bad usage" can catch this one type.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Malformed file contents (ASC grids, checkpoints, configs).
class FormatError : public Error {
 public:
  using Error::Error;
};

/// Filesystem failures: unreadable inputs, unwritable outputs.
class IoError : public Error {
 public:
  using Error::Error;
};

/// Tensor or raster dimensions that do not fit together.
class ShapeError : public Error {
 public:
  using Error::Error;
};

/// A documented precondition does not hold for the given arguments.
class PreconditionError : public Error {
 public:
  using Error::Error;
};

/// Invalid network / schedule / training configuration.
class ConfigError : public Error {
 public:
  using Error::Error;
};

namespace detail {

template <class E>
inline void require(bool ok, const std::string& message) {
  if (!ok) throw E(message);
}

}  // namespace detail
}  // namespace dsrgan

#endif  // DSRGAN_ERROR_HPP_
