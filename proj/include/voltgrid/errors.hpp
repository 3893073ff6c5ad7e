#pragma once

#include <stdexcept>
#include <string>

namespace voltgrid {

// Base class for everything this library throws on purpose.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// --- input / file errors ---------------------------------------------------

struct ParseError : Error {
    ParseError(const std::string& what, long row = -1)
        : Error(row >= 0 ? what + " (row " + std::to_string(row) + ")" : what), row(row) {}
    long row;
};

struct CyclicTopology : Error {
    using Error::Error;
};

struct DisconnectedBus : Error {
    using Error::Error;
};

struct NonPositiveReactance : Error {
    using Error::Error;
};

// --- linear algebra --------------------------------------------------------

struct NotSymmetric : Error {
    using Error::Error;
};

struct NotPositiveDefinite : Error {
    NotPositiveDefinite(const std::string& what, double min_eigenvalue)
        : Error(what + " (min eigenvalue " + std::to_string(min_eigenvalue) + ")"),
          min_eigenvalue(min_eigenvalue) {}
    double min_eigenvalue;
};

struct NoConvergence : Error {
    NoConvergence(const std::string& what, double residual)
        : Error(what + " (residual " + std::to_string(residual) + ")"), residual(residual) {}
    double residual;
};

struct DimensionMismatch : Error {
    using Error::Error;
};

// --- optimization / stability ----------------------------------------------

struct InfeasibleBounds : Error {
    using Error::Error;
};

struct EmptySweep : Error {
    using Error::Error;
};

struct BadWeights : Error {
    using Error::Error;
};

struct InfeasiblePoint : Error {
    using Error::Error;
};

// --- environment / training ------------------------------------------------

struct UnsupportedNormCombination : Error {
    using Error::Error;
};

struct SigmaZero : Error {
    using Error::Error;
};

struct ShapeMismatch : Error {
    using Error::Error;
};

struct NonFiniteLoss : Error {
    NonFiniteLoss(const std::string& what, long episode)
        : Error(what + " (episode " + std::to_string(episode) + ")"), episode(episode) {}
    long episode;
};

}  // namespace voltgrid
