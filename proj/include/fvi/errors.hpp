#pragma once

#include <stdexcept>
#include <string>

namespace fvi {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class SingularMatrixError : public Error {
public:
    using Error::Error;
};

/// A field or potential was evaluated outside its domain.
class DomainError : public Error {
public:
    using Error::Error;
};

/// Step size places h/(2 eps) on a pole of tan.
class ResonanceError : public Error {
public:
    using Error::Error;
};

/// Fixed-point iteration failed to converge under strict mode.
class ConvergenceError : public Error {
public:
    using Error::Error;
};

/// The model carries no momentum generator S.
class MissingInvarianceError : public Error {
public:
    using Error::Error;
};

class ZeroFieldError : public Error {
public:
    using Error::Error;
};

/// Adaptive step-size controller stalled.
class StepSizeUnderflowError : public Error {
public:
    using Error::Error;
};

/// Reference solve refused because its cost grows like t_end / eps.
class ReferenceCostError : public Error {
public:
    using Error::Error;
};

class InvalidArgument : public Error {
public:
    using Error::Error;
};

}  // namespace fvi
