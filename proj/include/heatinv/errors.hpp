#pragma once

#include <stdexcept>
#include <string>

namespace heatinv {

// Base class for every error thrown by the library.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& msg) : std::runtime_error(msg) {}
};

// Bad resolutions, parity violations, shape mismatches, invalid indices,
// wrong grid kinds, invalid truncations. CLI exit code 2.
class InvalidArgumentError : public Error {
public:
    using Error::Error;
};

// Explicit scheme refused: time step exceeds the stability limit.
// Carries the smallest admissible step count. CLI exit code 3.
class UnstableConfigError : public Error {
public:
    UnstableConfigError(const std::string& msg, long suggested_nt)
        : Error(msg), suggested_nt(suggested_nt) {}
    long suggested_nt;
};

// NaN/overflow detected mid-march. CLI exit code 4.
class DivergenceError : public Error {
public:
    DivergenceError(const std::string& msg, long step)
        : Error(msg), step(step) {}
    long step;
};

// File or directory problems. CLI exit code 5.
class IoError : public Error {
public:
    using Error::Error;
};

// Division by a zero sample (E(t_n) = 0, r = 0) or a state where the
// requested quantity is undefined (nonpositive r in a log).
class NumericError : public Error {
public:
    using Error::Error;
};

// Quadrature rule too coarse for the requested spectral truncation.
class UnderResolvedError : public Error {
public:
    using Error::Error;
};

}  // namespace heatinv
