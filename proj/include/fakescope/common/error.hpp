#pragma once

#include <stdexcept>
#include <string>

namespace fakescope {

// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid or inconsistent configuration (maps to CLI exit code 2).
class ConfigError : public Error {
 public:
  using Error::Error;
};

// An image operation would produce an image below the minimum usable size.
class DegenerateSizeError : public Error {
 public:
  using Error::Error;
};

}  // namespace fakescope
