#pragma once

#include <stdexcept>
#include <string>

namespace morsespec {

/// Root of every error the library throws.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// A one-step generator has |det G(omega)| below the invertibility floor.
class SingularGenerator : public Error {
public:
    using Error::Error;
};

class ZeroVector : public Error {
public:
    using Error::Error;
};

class NonPositiveValue : public Error {
public:
    using Error::Error;
};

/// Two subspaces do not form a direct sum of the ambient space.
class DegenerateSplitting : public Error {
public:
    using Error::Error;
};

class EmptyFiber : public Error {
public:
    using Error::Error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

/// A product of cocycle steps left the range of double precision.
class NumericOverflow : public Error {
public:
    using Error::Error;
};

class InvalidPlan : public Error {
public:
    using Error::Error;
};

class UnknownScenario : public Error {
public:
    using Error::Error;
};

class InvalidParams : public Error {
public:
    using Error::Error;
};

class ConfigError : public Error {
public:
    using Error::Error;
};

} // namespace morsespec
