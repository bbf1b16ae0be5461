#pragma once

#include <stdexcept>

namespace elmc {

/// Caller-side contract violation: bad shapes, out-of-range counts, malformed files.
class ValidationError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

/// Numerical breakdown while fitting or factorizing (non-finite loss, singular kernel).
class NumericalError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

/// Filesystem failure (missing file, unwritable directory).
class IoError : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

}  // namespace elmc
