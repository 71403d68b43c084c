#pragma once

#include <stdexcept>
#include <string>

namespace framecmd {

/// Base class for every error raised by this library.
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& message) : std::runtime_error(message) {}
};

/// Bad or missing configuration (config files, backend settings).
class ConfigError : public Error {
 public:
  using Error::Error;
};

}  // namespace framecmd
