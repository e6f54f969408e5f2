#pragma once

#include <stdexcept>
#include <string>

namespace spatialmut {

struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

struct DimensionMismatchError : Error {
    using Error::Error;
};

struct UnsupportedMethodError : Error {
    using Error::Error;
};

struct InvalidArgumentError : Error {
    using Error::Error;
};

/// Law undefined or degenerate (all hypoexponential stages vanish, no law
/// attached to a boundary regime, ...).
struct NoLawError : Error {
    using Error::Error;
};

struct MissingLimitsError : Error {
    using Error::Error;
};

struct HypothesisViolationError : Error {
    using Error::Error;
};

}  // namespace spatialmut
