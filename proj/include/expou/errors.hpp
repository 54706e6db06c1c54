#pragma once

#include <stdexcept>
#include <string>

namespace expou {

/// Argument outside the mathematical domain of an operation (sigma <= 0, t < 0, ...).
class DomainError : public std::domain_error {
public:
    using std::domain_error::domain_error;
};

/// Parameter set violating a model invariant.
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Black-Scholes inversion failure; `bound()` names which side of the no-arbitrage band was hit.
class InversionError : public std::runtime_error {
public:
    enum class Bound { Lower, Upper, NoConvergence };

    InversionError(Bound bound, const std::string& what)
        : std::runtime_error(what), bound_(bound) {}

    Bound bound() const noexcept { return bound_; }

private:
    Bound bound_;
};

class CalibrationError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace expou
