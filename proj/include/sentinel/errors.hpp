#pragma once

#include <stdexcept>
#include <string>

namespace sentinel {

// Precondition violated on a pure operation (bad length, out-of-range value, unknown id).
class DomainError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// Protocol step invoked from the wrong state.
class ProtocolError : public std::logic_error {
public:
  using std::logic_error::logic_error;
};

// Scenario or topology configuration is inconsistent.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

// No usable link between two parties.
class UnreachableError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

class DemodulationError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

} // namespace sentinel
