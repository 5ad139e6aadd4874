#pragma once

#include <stdexcept>
#include <string>

namespace rcl {

// Invalid inputs: bad parameter values, malformed config documents.
// The CLI maps these to exit code 2.
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Runtime numeric failures: singular systems, residuals out of tolerance,
// root brackets that cannot be established, double-range overflow.
// The CLI maps these to exit code 3.
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace rcl
