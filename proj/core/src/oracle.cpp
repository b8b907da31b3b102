#include "capbound/oracle.hpp"

#include <atomic>
#include <cmath>
#include <vector>

#include "capbound/parallel.hpp"

namespace capbound::oracle {

using constraints::CostKind;
using constraints::CostTerm;
using numerics::Interval;

std::uint64_t counter_rng(std::uint64_t seed, std::uint64_t t) {
    // splitmix64 finalizer on a strided counter: stateless and indexable, so
    // any partition of the sample range reproduces the same draws.
    std::uint64_t z = seed + (t + 1) * 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

namespace {

double uniform01(std::uint64_t bits) {
    return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

}  // namespace

McEstimate mc_log_volume(const ConstraintSet& cs, const McConfig& cfg) {
    if (cfg.n < 1) throw Error("dimension must be >= 1");
    if (cfg.samples < 10'000) throw Error("need at least 1e4 samples");
    if (cfg.n < cs.max_window()) throw Error("dimension below the constraint window");

    // Derive the bounding box half-width.
    double half = 0;
    if (cfg.bounding == McConfig::Bounding::well_box) {
        if (!cs.has_finite_support() ||
            !std::holds_alternative<Interval>(cs.support()))
            throw NoBoundingBox("well box needs a finite interval support (add a peak well)");
        const Interval iv = cs.support_interval();
        half = std::max(std::abs(iv.lo), std::abs(iv.hi));
    } else {
        if (cfg.ball_radius > 0) {
            half = cfg.ball_radius;
        } else {
            double p = -1;
            for (const CostTerm& t : cs.terms())
                if (t.kind == CostKind::power) p = t.limit;
            if (p <= 0)
                throw NoBoundingBox("ball box needs a power term to derive the radius");
            half = std::sqrt(cfg.n * p);
        }
        // Rejection from the circumscribing cube of a ball collapses fast
        // with dimension; past n = 8 a peak well must supply the box.
        if (cfg.n > 8)
            throw NoBoundingBox("ball-box sampling is limited to n <= 8; use a peak well");
    }

    const int n = cfg.n;
    const std::int64_t samples = cfg.samples;
    std::atomic<std::int64_t> hits{0};
    parallel_for(
        samples,
        [&](std::int64_t b, std::int64_t e) {
            std::vector<double> x(n);
            std::int64_t local = 0;
            for (std::int64_t s = b; s < e; ++s) {
                const std::uint64_t base = static_cast<std::uint64_t>(s) *
                                           static_cast<std::uint64_t>(n);
                for (int d = 0; d < n; ++d) {
                    const double u = uniform01(counter_rng(cfg.seed, base + d));
                    x[d] = half * (2.0 * u - 1.0);
                }
                if (constraints::is_feasible(cs, x)) ++local;
            }
            hits.fetch_add(local, std::memory_order_relaxed);
        },
        cfg.threads);

    const std::int64_t h = hits.load();
    if (h == 0) throw ZeroHits("no sample landed in the constraint body");
    const double frac = static_cast<double>(h) / static_cast<double>(samples);
    McEstimate out;
    out.hits = h;
    out.samples = samples;
    out.hit_fraction = frac;
    out.log_volume_per_dim = std::log(2.0 * half) + std::log(frac) / n;
    // Var(log p_hat) ~ (1 - p) / (p N) by the delta method.
    out.std_err = std::sqrt((1.0 - frac) / (frac * static_cast<double>(samples))) / n;
    return out;
}

double exact_ball_log_volume(int n, double p) {
    if (n < 1 || !(p > 0)) throw Error("exact_ball_log_volume needs n >= 1, P > 0");
    const double nn = n;
    return 0.5 * std::log(nn * numerics::pi * p) - std::lgamma(nn / 2.0 + 1.0) / nn;
}

}  // namespace capbound::oracle
