#pragma once

#include <stdexcept>
#include <string>

namespace pixelnes {

/// Raised when a caller breaks an operation's precondition (sizes, ranges).
class ContractViolation : public std::invalid_argument {
public:
    explicit ContractViolation(const std::string& what) : std::invalid_argument(what) {}
};

/// Raised when an environment backend misbehaves (wrong frame size, bad action count).
class EnvironmentError : public std::runtime_error {
public:
    explicit EnvironmentError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a file on disk is not in the expected format.
class FormatError : public std::runtime_error {
public:
    explicit FormatError(const std::string& what) : std::runtime_error(what) {}
};

inline void require(bool condition, const std::string& message)
{
    if (!condition)
        throw ContractViolation(message);
}

} // namespace pixelnes
