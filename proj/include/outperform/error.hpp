#pragma once

#include <stdexcept>
#include <string>

namespace outperform {

/// Base class of every error thrown by the library.
class error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Malformed or invariant-violating input data (CSV rows, scenario files).
class ingestion_error : public error {
public:
    using error::error;
};

/// A precondition on an operation's arguments does not hold.
class invalid_argument : public error {
public:
    using error::error;
};

/// A computation produced a non-finite or otherwise unusable value.
class numeric_error : public error {
public:
    using error::error;
};

} // namespace outperform
