#pragma once

#include <stdexcept>
#include <string>

namespace survquack {

// Every failure raised by the library derives from Error so callers that only
// need "did it work" can catch one type. The CLI maps InputError subclasses to
// exit code 2 and NumericalError to exit code 3.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class InputError : public Error {
public:
    using Error::Error;
};

/// Argument outside the mathematical domain of an operation.
class DomainError : public InputError {
public:
    using InputError::InputError;
};

/// Malformed configuration or dataset contents.
class ValidationError : public InputError {
public:
    using InputError::InputError;
};

class UnsupportedCensoring : public InputError {
public:
    UnsupportedCensoring(const std::string& what, std::size_t censored)
        : InputError(what), censored_(censored) {}
    std::size_t censored() const noexcept { return censored_; }

private:
    std::size_t censored_;
};

/// A subgroup target survival probability fell outside (0, 1).
class InfeasibleScenario : public InputError {
public:
    using InputError::InputError;
};

/// Quantile or median requested from a curve that never drops to the level.
class NotReached : public Error {
public:
    using Error::Error;
};

/// Sample has no spread or no events where the estimator needs them.
class DegenerateSample : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

} // namespace survquack
