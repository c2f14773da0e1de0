#pragma once

#include <stdexcept>
#include <string>

namespace orderid {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

/// Parameter vector violates the family layout or constraints.
struct InvalidTheta : Error {
    using Error::Error;
};

/// Tensor-grid evaluation requested for a parameter space too large to grid.
struct DimensionTooHigh : Error {
    using Error::Error;
};

/// Fewer usable grid points than a fit requires.
struct InsufficientData : Error {
    using Error::Error;
};

/// Input outside the stated domain of a bound or inequality.
struct DomainViolation : Error {
    using Error::Error;
};

/// A formula required a nonzero coefficient that is zero.
struct ZeroCoefficient : Error {
    using Error::Error;
};

/// Bracket radius search exhausted its interval without validating.
struct EtaSearchFailed : Error {
    using Error::Error;
};

/// A construction required a strictly positive weight that is zero.
struct DegenerateWeight : Error {
    using Error::Error;
};

struct ParseError : Error {
    using Error::Error;
};

struct ValidationError : Error {
    using Error::Error;
};

struct IoError : Error {
    using Error::Error;
};

} // namespace orderid
