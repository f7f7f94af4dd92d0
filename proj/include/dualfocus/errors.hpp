#pragma once

#include <stdexcept>
#include <string>

namespace dualfocus {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Input outside the mathematical domain of an operation (e.g. negative defocus).
class DomainError : public Error {
public:
    using Error::Error;
};

/// Invalid configuration (bad slide spec, unsupported scan geometry, ...).
class ConfigError : public Error {
public:
    using Error::Error;
};

/// Index outside a valid range (tile outside the grid).
class RangeError : public Error {
public:
    using Error::Error;
};

/// Malformed call arguments (even stack size, empty lag window, ...).
class ArgumentError : public Error {
public:
    using Error::Error;
};

/// Input carrying no usable signal (constant frame).
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

/// I/O and parse failures for PGM/JSON/CSV files.
class IoError : public Error {
public:
    using Error::Error;
};

} // namespace dualfocus
