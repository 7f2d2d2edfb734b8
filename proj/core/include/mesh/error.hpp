#pragma once

#include <stdexcept>
#include <string>

namespace mesh {

/// Malformed or inconsistent input data (bad rows, unknown players, ...).
class DataError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Invalid arguments or configuration supplied by the caller.
class UsageError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Nonfinite objectives, grid underflow, failed convergence contracts.
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace mesh
