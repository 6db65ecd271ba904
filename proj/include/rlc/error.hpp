#pragma once

#include <stdexcept>
#include <string>

namespace rlc {

// Base class for every failure raised by this library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Malformed input data: dataset records, config files, checkpoint blobs.
class ParseError : public Error {
 public:
  using Error::Error;
};

// A remote backend could not be reached or answered outside 2xx.
class TransportError : public Error {
 public:
  using Error::Error;
};

// A remote backend was reached but does not support the requested operation.
class CapabilityError : public Error {
 public:
  using Error::Error;
};

}  // namespace rlc
