#pragma once

#include <stdexcept>
#include <string>

namespace nsmi {

/// Invalid numeric parameter (schedule bounds, tolerances, sizes).
class ParameterError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Arrays whose dimensions do not agree with an operator or with each other.
class ShapeError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Iterative solver stopped at max_iter without reaching its tolerance.
class ConvergenceError : public std::runtime_error {
public:
    ConvergenceError(const std::string& what, double residual, int iterations)
        : std::runtime_error(what), residual_(residual), iterations_(iterations) {}

    double residual() const noexcept { return residual_; }
    int iterations() const noexcept { return iterations_; }

private:
    double residual_;
    int iterations_;
};

/// Rejected configuration (unknown keys, incompatible modes).
class ConfigError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Base for every failure talking to an external denoiser.
class DenoiserError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class ConnectionError : public DenoiserError {
public:
    using DenoiserError::DenoiserError;
};

class ProtocolError : public DenoiserError {
public:
    using DenoiserError::DenoiserError;
};

class TimeoutError : public DenoiserError {
public:
    using DenoiserError::DenoiserError;
};

/// The remote side answered with status = error.
class RemoteError : public DenoiserError {
public:
    using DenoiserError::DenoiserError;
};

}  // namespace nsmi
