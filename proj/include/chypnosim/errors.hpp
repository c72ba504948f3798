#pragma once

#include <stdexcept>
#include <string>

namespace chypnosim {

/// Argument outside a documented validity range (time span, frequency range, address).
class RangeError : public std::out_of_range {
public:
    using std::out_of_range::out_of_range;
};

/// Caller violated an operation precondition.
class PreconditionError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Waveform does not cover the requested interval.
class CoverageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed configuration document. `field()` names the offending key path.
class ConfigError : public std::runtime_error {
public:
    ConfigError(std::string field, const std::string &reason)
        : std::runtime_error(field + ": " + reason), field_(std::move(field)), reason_(reason) {}
    const std::string &field() const noexcept { return field_; }
    const std::string &reason() const noexcept { return reason_; }

private:
    std::string field_;
    std::string reason_;
};

/// Internal consistency check failed; indicates a bug, not bad input.
class InvariantError : public std::logic_error {
public:
    using std::logic_error::logic_error;
};

} // namespace chypnosim
