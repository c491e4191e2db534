#pragma once

#include <stdexcept>
#include <string>

namespace tri {

/// Precondition violation on an in-memory operation (bad shape, non-finite
/// input, invalid configuration).
class DomainError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Malformed serialized input. `field()` names the part of the input that
/// failed to parse (header field, JSON key, ...).
class ParseError : public std::runtime_error {
public:
    ParseError(std::string field, const std::string& what)
        : std::runtime_error(field + ": " + what), field_(std::move(field)) {}

    const std::string& field() const noexcept { return field_; }

private:
    std::string field_;
};

} // namespace tri
