#pragma once

#include <stdexcept>
#include <string>

namespace embkit {

/// Base class for every exception thrown by embkit.
class Error : public std::runtime_error {
  public:
    using std::runtime_error::runtime_error;
};

/// A caller violated an operation's precondition (bad argument, malformed row).
class InvalidArgument : public Error {
  public:
    using Error::Error;
};

/// A file could not be opened, read, written, or has the wrong format.
class IoError : public Error {
  public:
    using Error::Error;
};

}  // namespace embkit
