#pragma once

#include <stdexcept>
#include <string>

namespace wavestab {

/// Malformed or out-of-range configuration input.
class ConfigError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// A solver precondition failed: CFL bound, data compatibility, domain size.
class PreconditionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

inline void ensure(bool condition, const std::string& message) {
  if (!condition) throw std::invalid_argument(message);
}

inline void ensure_precondition(bool condition, const std::string& message) {
  if (!condition) throw PreconditionError(message);
}

}  // namespace wavestab
