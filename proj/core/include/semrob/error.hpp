#pragma once

#include <stdexcept>
#include <string>

namespace semrob {

// Base class for all library errors.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// Invalid configuration values: non-positive budgets, bad sizes, out-of-range knobs.
struct ConfigError : Error {
    using Error::Error;
};

// Dimension mismatches between vectors, bases and budget matrices.
struct ShapeError : Error {
    using Error::Error;
};

// File and serialization failures.
struct IoError : Error {
    using Error::Error;
};

// Numerical failures that indicate a bug (e.g. bisection cannot bracket).
struct NumericalError : Error {
    using Error::Error;
};

// Statistics requested on empty or degenerate data.
struct StatError : Error {
    using Error::Error;
};

} // namespace semrob
