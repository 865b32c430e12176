#pragma once

#include <stdexcept>
#include <string>

namespace toposhield {

// Base class for all library errors.
class Error : public std::runtime_error {
public:
    using std::runtime_error::runtime_error;
};

// Input matrix/vector is structurally unusable: non-square, NaN entries,
// negative weights, row sums off tolerance, or dimension mismatch.
class MalformedInputError : public Error {
public:
    using Error::Error;
};

// random_topology exhausted its retry budget without drawing a matrix that
// admits consensus (density too low for a strongly connected aperiodic draw).
class GenerationFailureError : public Error {
public:
    using Error::Error;
};

// Observer window shorter than the node count (T < n).
class InsufficientDataError : public Error {
public:
    using Error::Error;
};

// A required vector is zero (x0 = 0, K0 = 0) or otherwise carries no
// usable direction.
class DegenerateInputError : public Error {
public:
    using Error::Error;
};

// Initial state lies in span{1}: every admissible probe q is orthogonal to
// it, so the rank-1 construction has no leverage.
class DegenerateInitialStateError : public Error {
public:
    using Error::Error;
};

// w'x0 = 0: the consensus value vanishes and the rank-1 gain is undefined.
class ZeroConsensusValueError : public Error {
public:
    using Error::Error;
};

// Parameter outside its contract (alpha <= 0, safety outside (0,1), ...).
class InvalidParameterError : public Error {
public:
    using Error::Error;
};

// Constraint system has full column rank: no nonzero feedback exists on the
// allowed support.
class InfeasibleError : public Error {
public:
    using Error::Error;
};

// Kernel-basis combination collapsed to (numerically) zero.
class CombinationDegenerateError : public Error {
public:
    using Error::Error;
};

} // namespace toposhield
