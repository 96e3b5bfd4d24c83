#pragma once

#include <stdexcept>
#include <string>

namespace wsaw {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Argument outside the mathematical domain of an operation (negative time, NaN, g <= 0, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Iterative method failed to converge or produced a non-finite value.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, double residual = 0.0)
        : Error(what), residual_(residual) {}

    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

/// A resolvent-based quantity was requested at (or past) the critical point,
/// where ||Q|| reaches the shift and the Neumann series diverges.
class CriticalityError : public NumericalError {
public:
    CriticalityError(const std::string& what, double lambda)
        : NumericalError(what), lambda_(lambda) {}

    double lambda() const noexcept { return lambda_; }

private:
    double lambda_;
};

/// Invalid configuration file or command-line value.
class ConfigError : public Error {
public:
    using Error::Error;
};

}  // namespace wsaw
