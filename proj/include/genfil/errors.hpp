#pragma once

#include <stdexcept>
#include <string>

namespace genfil {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Two grid times of different resolution were mixed.
class ResolutionError : public Error {
public:
    using Error::Error;
};

/// An arrow or interval was requested with its endpoints in the wrong order.
class OrderingError : public Error {
public:
    using Error::Error;
};

/// Enumeration would exceed the configured bit cap.
class SizeError : public Error {
public:
    using Error::Error;
};

/// Invalid model or market parameters.
class ParameterError : public Error {
public:
    using Error::Error;
};

/// A morphism is not null-preserving where the operation requires it.
class NullPreservationError : public Error {
public:
    NullPreservationError(const std::string& what, std::string witness)
        : Error(what), witness_(std::move(witness)) {}

    const std::string& witness() const noexcept { return witness_; }

private:
    std::string witness_;
};

/// |mu - r| >= 2^{N/2} sigma: no risk-neutral transition probability in (0,1).
class NoArbitrageBoundError : public Error {
public:
    using Error::Error;
};

/// A one-step arrow does not factor through the full restriction.
class FactorizationError : public Error {
public:
    FactorizationError(const std::string& what, std::string step)
        : Error(what), step_(std::move(step)) {}

    const std::string& step() const noexcept { return step_; }

private:
    std::string step_;
};

}  // namespace genfil
