#pragma once

#include <stdexcept>
#include <string>

#include <Eigen/Dense>

namespace hlab {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or mismatched arguments (dimension mismatch, empty cloud, bad JSON).
class InputError : public Error {
public:
    using Error::Error;
};

/// A word count n^N exceeds the configured cell budget.
class ResourceError : public Error {
public:
    using Error::Error;
};

/// A point lies outside the domain of an operation (e.g. outside every branch image).
class DomainError : public Error {
public:
    using Error::Error;
};

/// The check or construction is not defined for this kind of system.
class UnsupportedError : public Error {
public:
    using Error::Error;
};

/// An argument violates a documented precondition (e.g. not in the ideal J(X)).
class PreconditionError : public Error {
public:
    using Error::Error;
};

/// An iterative method failed to converge. Carries the last iterate.
class NumericalError : public Error {
public:
    NumericalError(const std::string& what, Eigen::VectorXcd last_iterate = {})
        : Error(what), last_iterate_(std::move(last_iterate)) {}

    const Eigen::VectorXcd& last_iterate() const noexcept { return last_iterate_; }

private:
    Eigen::VectorXcd last_iterate_;
};

}  // namespace hlab
