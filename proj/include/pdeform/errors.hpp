#pragma once

#include <stdexcept>
#include <string>

namespace pdeform {

class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Malformed or inconsistent input.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Input outside the mathematical domain of an operation (e.g. log of zero).
class DomainError : public Error {
public:
    using Error::Error;
};

class NumericalError : public Error {
public:
    using Error::Error;
};

class ResourceError : public Error {
public:
    using Error::Error;
};

// A computed quantity failed an internal consistency check.
class ConsistencyError : public Error {
public:
    using Error::Error;
};

} // namespace pdeform
