#pragma once

#include <stdexcept>
#include <string>

namespace smwave {

// Base of every error raised by the library. Subclasses name the failed
// contract so callers (the CLI in particular) can map them to exit codes.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Invalid numeric parameter (Hurst index, wave speed, grid counts ...).
class ParameterError : public Error { using Error::Error; };

// Interval endpoint or cell count that does not sit on the path grid.
class AlignmentError : public Error { using Error::Error; };

// A generator spec failed its validation (density mass, kernel Hoelder check).
class SpecError : public Error { using Error::Error; };

// Sampling failed (covariance not positive definite after jitter).
class GenerationError : public Error { using Error::Error; };

// Requested Fourier order exceeds the available expansion.
class OrderError : public Error { using Error::Error; };

// Requested resolution is finer than the data or quadrature supports.
class ResolutionError : public Error { using Error::Error; };

// A numerically checked hypothesis (Hoelder, Lipschitz, monotone ...) failed.
class ContractError : public Error { using Error::Error; };

// Domain of dependence leaves the spatial window.
class CoverageError : public Error { using Error::Error; };

// Inconsistent combination of inputs (mode without expansion, bad config ...).
class ConfigError : public Error { using Error::Error; };

// Picard iteration hit max_iter; carries the last residual.
class NonconvergenceError : public Error {
public:
    NonconvergenceError(const std::string& what, double residual)
        : Error(what), residual_(residual) {}
    double residual() const noexcept { return residual_; }

private:
    double residual_;
};

// Fields or tables with mismatched shapes.
class ShapeError : public Error { using Error::Error; };

// Rate fit impossible (fewer than two usable points).
class FitError : public Error { using Error::Error; };

// Too many failed replicas in a Monte Carlo study.
class StudyError : public Error { using Error::Error; };

// File system failure.
class IoError : public Error { using Error::Error; };

} // namespace smwave
