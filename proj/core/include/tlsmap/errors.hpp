#pragma once

#include <stdexcept>
#include <string>

namespace tlsmap {

// Base class for all library errors. The CLI maps these to exit code 3
// (runtime failures) or 2 (configuration/validation problems).
class Error : public std::runtime_error {
 public:
  explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad user input: malformed config, inconsistent schedule, invalid layout.
class ConfigError : public Error {
 public:
  explicit ConfigError(const std::string& msg) : Error(msg) {}
};

// File could not be read, written, or parsed.
class IoError : public Error {
 public:
  explicit IoError(const std::string& msg) : Error(msg) {}
};

// A numerical routine failed to converge or produced no usable result.
class NumericsError : public Error {
 public:
  explicit NumericsError(const std::string& msg) : Error(msg) {}
};

// Localization could not produce a valid position (e.g. no grid cell with
// enough usable electrode pairs).
class LocalizationError : public NumericsError {
 public:
  explicit LocalizationError(const std::string& msg) : NumericsError(msg) {}
};

}  // namespace tlsmap
