#pragma once

#include <stdexcept>
#include <string>

namespace chainplace {

/// Raised for malformed or inconsistent configuration input. The message
/// carries a field path (e.g. "topology.devices[3].cores") so users can
/// locate the offending entry.
class ConfigError : public std::runtime_error {
public:
    explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when an exhaustive enumeration would exceed the configured
/// combination cap.
class CapExceededError : public std::runtime_error {
public:
    explicit CapExceededError(const std::string& what) : std::runtime_error(what) {}
};

} // namespace chainplace
