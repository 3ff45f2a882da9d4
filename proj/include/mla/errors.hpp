#pragma once

#include <stdexcept>
#include <string>

namespace mla {

/// Raised when an exact method would exceed its configured size cap. The
/// message names the cap and, where useful, the cheaper alternative.
class CapExceededError : public std::runtime_error {
public:
    explicit CapExceededError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised when a computed quantity violates an invariant it must satisfy
/// (probability mass off beyond drift tolerance, ratio bounds, coupling
/// tightness).
class NumericInvariantError : public std::runtime_error {
public:
    explicit NumericInvariantError(const std::string& what) : std::runtime_error(what) {}
};

/// Raised on malformed input files; the message names the offending field.
class ParseError : public std::runtime_error {
public:
    explicit ParseError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace mla
