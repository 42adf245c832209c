#ifndef TEAM_ERRORS_HPP
#define TEAM_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace team {

// Bad parameters, flags, or preconditions chosen by the caller.
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Malformed or inconsistent input data.
class DataError : public std::runtime_error {
 public:
  explicit DataError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace team

#endif  // TEAM_ERRORS_HPP
