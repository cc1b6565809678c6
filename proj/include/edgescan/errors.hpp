#pragma once

#include <stdexcept>
#include <string>

namespace edgescan {

// Base class for all recoverable toolkit errors.
class Error : public std::runtime_error {
public:
    explicit Error(const std::string& what) : std::runtime_error(what) {}
};

// Point set is rank-deficient (collinear or coincident): a rigid fit is
// under-constrained.
class DegenerateGeometry : public Error {
public:
    using Error::Error;
};

// Nearest-neighbor query against an empty cloud.
class EmptyCloud : public Error {
public:
    using Error::Error;
};

// A file exists but its contents cannot be parsed.
class ParseError : public Error {
public:
    using Error::Error;
};

// Parsed data violates a model/config invariant.
class ValidationError : public Error {
public:
    using Error::Error;
};

// Iterative solver exhausted its iteration budget away from the target.
class NoConvergence : public Error {
public:
    using Error::Error;
};

// A solved joint state falls outside the arm's limits.
class JointLimitViolation : public Error {
public:
    using Error::Error;
};

// Scan profile carries no returns at all.
class EmptyProfile : public Error {
public:
    using Error::Error;
};

// Profile has returns, but all are saturated or below the ground plane.
class NoCandidate : public Error {
public:
    using Error::Error;
};

// Fewer points than the consuming operation can work with.
class InsufficientPoints : public Error {
public:
    using Error::Error;
};

// Laser plane does not intersect the border polyline.
class NoIntersection : public Error {
public:
    using Error::Error;
};

}  // namespace edgescan
