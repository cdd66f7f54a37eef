#pragma once

#include <stdexcept>
#include <string>

namespace mixdyn {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the domain of an operation (negative time, y <= 0 in
/// lognormal mode, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Curve queried beyond its last pillar.
class ExtrapolationError : public Error {
public:
    using Error::Error;
};

/// Operation requested on a model of the wrong mode.
class UnsupportedModeError : public Error {
public:
    using Error::Error;
};

/// Malformed configuration, fixture or CSV input.
class InputError : public Error {
public:
    using Error::Error;
};

/// Numerical routine failed to reach its requested tolerance.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double achieved)
        : Error(what), achieved_(achieved) {}
    double achieved() const noexcept { return achieved_; }

private:
    double achieved_;
};

/// Which no-arbitrage bound an option price violates.
enum class PriceBound { lower, upper };

/// Price could not be inverted into an implied volatility.
class InversionError : public Error {
public:
    InversionError(const std::string& what, PriceBound bound)
        : Error(what), bound_(bound) {}
    PriceBound bound() const noexcept { return bound_; }

private:
    PriceBound bound_;
};

/// Finite-difference step too small for the working precision.
class StepSizeError : public Error {
public:
    using Error::Error;
};

/// Statistic undefined because one of its inputs has zero variance.
class DegenerateError : public Error {
public:
    using Error::Error;
};

}  // namespace mixdyn
