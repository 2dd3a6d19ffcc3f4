#pragma once

#include <stdexcept>
#include <string>

namespace romid {

/// Base class for every error raised by the toolkit.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

class DimensionMismatch : public Error {
public:
    using Error::Error;
};

class InsufficientSnapshots : public Error {
public:
    using Error::Error;
};

/// Malformed or truncated file, bad JSON metadata, bad CSV.
class FormatError : public Error {
public:
    using Error::Error;
};

/// Non-finite data or a factorization that failed to converge.
class NumericalError : public Error {
public:
    using Error::Error;
};

/// Requested rank exceeds the numerical rank of the data.
class RankError : public Error {
public:
    using Error::Error;
};

/// Tangent direction is not horizontal at its basepoint.
class TangencyError : public Error {
public:
    using Error::Error;
};

class LineSearchError : public Error {
public:
    using Error::Error;
};

/// UUᵀ too ill-conditioned: inputs are not sufficiently exciting.
class InputRankError : public Error {
public:
    using Error::Error;
};

/// LᵀX̂X̂ᵀL singular: the subspace captures no input-orthogonal state motion.
class ProjectedRankError : public Error {
public:
    using Error::Error;
};

class RangeError : public Error {
public:
    using Error::Error;
};

/// Explicit time step violates the diffusion stability bound.
class StabilityError : public Error {
public:
    using Error::Error;
};

}  // namespace romid
