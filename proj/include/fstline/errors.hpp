#pragma once

#include <stdexcept>
#include <string>

namespace fstline {

/// Classifies every failure the library can raise.
enum class ErrorKind {
    invalid_input,        // precondition or invariant violated by the caller
    domain,               // |v| >= 1 or a similar argument outside the map's domain
    delay_not_converged,  // light-cone root finder gave up
    delay_cap_exceeded,   // delay larger than the configured hard cap
    ordering_violation,   // upper charge not above the lower one
    light_line_singularity,
    superluminal,
    domain_exit,          // (t, x) left the set reachable from the strip
    strip_too_short,
    reference_construction,
    io,
};

inline const char* to_string(ErrorKind kind)
{
    switch (kind) {
    case ErrorKind::invalid_input: return "invalid input";
    case ErrorKind::domain: return "domain error";
    case ErrorKind::delay_not_converged: return "delay solver did not converge";
    case ErrorKind::delay_cap_exceeded: return "delay exceeds hard cap";
    case ErrorKind::ordering_violation: return "ordering violation";
    case ErrorKind::light_line_singularity: return "light-line singularity";
    case ErrorKind::superluminal: return "superluminal velocity";
    case ErrorKind::domain_exit: return "left the reachable domain";
    case ErrorKind::strip_too_short: return "strip too short";
    case ErrorKind::reference_construction: return "reference construction failed";
    case ErrorKind::io: return "i/o error";
    }
    return "unknown error";
}

class Error : public std::runtime_error {
public:
    Error(ErrorKind kind, const std::string& what)
        : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind)
    {
    }

    [[nodiscard]] ErrorKind kind() const noexcept { return kind_; }

private:
    ErrorKind kind_;
};

inline void require(bool condition, ErrorKind kind, const std::string& what)
{
    if (!condition) throw Error(kind, what);
}

} // namespace fstline
