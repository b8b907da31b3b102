#pragma once

#include <stdexcept>
#include <string>

namespace capbound {

// Base class for everything thrown by the library.
struct Error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

// An integral of exp{g} failed to converge (tail growth on an infinite
// domain, or the requested tolerance could not be met).
struct DivergentIntegral : Error {
    using Error::Error;
};

// Objective returned NaN inside the search bracket.
struct NonFinite : Error {
    using Error::Error;
};

// The objective decreases without bound; signals an empty or
// contradictory constraint region.
struct Unbounded : Error {
    using Error::Error;
};

// No admissible dual point with a finite partition function exists.
struct Infeasible : Error {
    using Error::Error;
};

// Cost function evaluated on a window of the wrong length.
struct WindowMismatch : Error {
    using Error::Error;
};

// The intersection of the declared supports is empty.
struct EmptySupport : Error {
    using Error::Error;
};

// Monte-Carlo sampler could not derive a finite bounding box.
struct NoBoundingBox : Error {
    using Error::Error;
};

// Monte-Carlo sampler saw no feasible point at all.
struct ZeroHits : Error {
    using Error::Error;
};

// Power iteration (or another fixed-point loop) stalled.
struct NoConvergence : Error {
    using Error::Error;
};

// Kernel operation asked for an unsupported window size or an
// asymmetric kernel where symmetry is required.
struct UnsupportedKernel : Error {
    using Error::Error;
};

// Collatz-Wielandt test function must be strictly positive.
struct NonPositiveTestFunction : Error {
    using Error::Error;
};

// Causal filter with h0 = 0 has a singular Jacobian.
struct ZeroLeadingTap : Error {
    using Error::Error;
};

// Scenario file violates the schema; message carries the field path.
struct ScenarioError : Error {
    using Error::Error;
};

}  // namespace capbound
