#pragma once

#include <stdexcept>
#include <string>

namespace neoea {

// Bad or missing input data: files, ids, shapes.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

// Invalid configuration or usage; maps to exit code 1 in the CLI.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Non-finite values or numerical breakdown at runtime.
class NumericError : public std::runtime_error {
 public:
  explicit NumericError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace neoea
