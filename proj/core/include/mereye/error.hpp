#pragma once

#include <stdexcept>
#include <string>

namespace mereye {

/// Base of every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A caller violated a precondition (bad argument, out-of-range window, ...).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Edge placement would violate the transition order of a sequence.
class EdgeOrderError : public DomainError {
public:
    using DomainError::DomainError;
};

/// Input grid does not match what a model can step on.
class GridMismatchError : public DomainError {
public:
    using DomainError::DomainError;
};

/// The model output never reached the level the analysis needs.
class PropagationError : public Error {
public:
    using Error::Error;
};

/// A simulation count would exceed its configured cap.
class BudgetError : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

class IoError : public Error {
public:
    using Error::Error;
};

}  // namespace mereye
