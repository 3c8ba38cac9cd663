#pragma once

#include <stdexcept>
#include <string>

namespace mimo_crlb {

/// Base class of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input that violates a documented precondition (bounds, sizes, signs).
class ValidationError : public Error {
public:
    using Error::Error;
};

class IndexError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

class DomainError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Non-positive or non-finite noise budget entries.
class BudgetError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// A platform sits on top of the target (range below the separation floor).
class SingularGeometryError : public ValidationError {
public:
    using ValidationError::ValidationError;
};

/// Fisher information is not positive definite: the geometry is unobservable.
class SingularFimError : public Error {
public:
    using Error::Error;
};

class UnsolvableError : public Error {
public:
    using Error::Error;
};

class SamplingError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mimo_crlb
