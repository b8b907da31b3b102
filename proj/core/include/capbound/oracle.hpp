#pragma once

#include <cstdint>

#include "capbound/constraints.hpp"

namespace capbound::oracle {

using constraints::ConstraintSet;

// Rejection-sampling configuration for the small-n volume estimate.
struct McConfig {
    int n = 8;                     // dimension
    std::int64_t samples = 1'000'000;
    std::uint64_t seed = 1;
    enum class Bounding { well_box, ball_box } bounding = Bounding::well_box;
    double ball_radius = 0;        // 0: derive sqrt(n P) from the power term
    int threads = 0;               // 0: max_threads()
};

struct McEstimate {
    double log_volume_per_dim = 0;  // (1/n)[log box volume + log hit fraction]
    double std_err = 0;             // delta method on log of the binomial proportion
    double hit_fraction = 0;
    std::int64_t hits = 0;
    std::int64_t samples = 0;
};

// Draws uniform points in the bounding box and counts membership in the
// constraint body. Deterministic given the seed, independent of the worker
// count. Throws NoBoundingBox when no finite box can be derived (an
// unbounded support without a power term, or n > 8 without a peak well) and
// ZeroHits when not a single draw lands in the body.
McEstimate mc_log_volume(const ConstraintSet& cs, const McConfig& cfg);

// (1/n)[(n/2) log(n pi P) - lgamma(n/2 + 1)]: exact per-dimension log volume
// of the n-ball of radius sqrt(n P).
double exact_ball_log_volume(int n, double p);

// Indexable counter-based generator: value t of the stream for `seed`.
// Exposed so tests can reproduce the sampler's draws.
std::uint64_t counter_rng(std::uint64_t seed, std::uint64_t t);

}  // namespace capbound::oracle
