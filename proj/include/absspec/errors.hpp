#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace absspec {

/// Base class of every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Matrix or subspace dimensions do not fit the operation.
class ShapeError : public Error {
public:
    using Error::Error;
};

/// NaN/Inf entries or otherwise unusable numeric input.
class InputError : public Error {
public:
    using Error::Error;
};

/// Iterative kernel (Schur reduction, secant solve, integrator) failed.
class NumericalError : public Error {
public:
    using Error::Error;
};

class IntegrationError : public NumericalError {
public:
    IntegrationError(const std::string& what, double position)
        : NumericalError(what + " at x = " + std::to_string(position)), position_(position) {}
    double position() const noexcept { return position_; }

private:
    double position_;
};

/// Requested eigenvalue split passes through a numerically coincident cluster.
class ClusterSplitError : public Error {
public:
    using Error::Error;
};

/// The two leading compound eigenvalues do not separate from the rest.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// Determinant vanishes on the contour after all radius perturbations.
class ContourError : public NumericalError {
public:
    using NumericalError::NumericalError;
};

/// The absolute-spectrum locus crosses a disk in more than one arc.
class DiskTooLarge : public Error {
public:
    using Error::Error;
};

/// An operation precondition was violated by the caller.
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// Inconsistent configuration (exclusion radii, tolerance files, CLI flags).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Middle coefficient family does not meet the tail matrix at a seam.
class ContinuityError : public Error {
public:
    using Error::Error;
};

/// A structural hypothesis on the problem data is violated.
class HypothesisError : public Error {
public:
    using Error::Error;
};

/// Spectral parameter outside the declared analyticity region.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Malformed problem file or expression, with source position when known.
class SchemaError : public Error {
public:
    SchemaError(const std::string& what, std::size_t line = 0, std::size_t column = 0)
        : Error(line > 0 ? what + " (line " + std::to_string(line) + ", column " + std::to_string(column) + ")"
                         : what),
          line_(line), column_(column) {}
    std::size_t line() const noexcept { return line_; }
    std::size_t column() const noexcept { return column_; }

private:
    std::size_t line_;
    std::size_t column_;
};

} // namespace absspec
