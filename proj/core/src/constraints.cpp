#include "capbound/constraints.hpp"

#include <algorithm>
#include <cmath>

namespace capbound::constraints {

using numerics::Interval;

CostTerm CostTerm::power(double p, Mode mode) {
    CostTerm t;
    t.kind = CostKind::power;
    t.limit = p;
    t.mode = mode;
    t.growth = {1.0, 2, 0.0};
    return t;
}

CostTerm CostTerm::absolute(double g, Mode mode) {
    CostTerm t;
    t.kind = CostKind::absolute;
    t.limit = g;
    t.mode = mode;
    t.growth = {1.0, 1, 0.0};
    return t;
}

CostTerm CostTerm::peak_well(double a) {
    if (!(a > 0)) throw Error("peak well requires amplitude A > 0");
    CostTerm t;
    t.kind = CostKind::peak_well;
    t.limit = 0.0;
    t.amplitude = a;
    return t;
}

CostTerm CostTerm::moment(double p, double g, Mode mode) {
    if (!(p > 0)) throw Error("moment exponent must be positive");
    CostTerm t;
    t.kind = CostKind::moment;
    t.exponent = p;
    t.limit = g;
    t.mode = mode;
    t.growth = {1.0, static_cast<int>(std::ceil(p)), 1.0};
    return t;
}

CostTerm CostTerm::correlation(int lag, double r, Mode mode) {
    if (lag < 1) throw Error("correlation lag must be >= 1");
    CostTerm t;
    t.kind = CostKind::correlation;
    t.lag = lag;
    t.window = lag + 1;
    t.limit = r;
    t.mode = mode;
    return t;
}

CostTerm CostTerm::window_avg_power(int m, double p, Mode mode) {
    if (m < 1) throw Error("window size must be >= 1");
    CostTerm t;
    t.kind = CostKind::window_avg_power;
    t.window = m;
    t.limit = p;
    t.mode = mode;
    t.growth = {1.0 / m, 2, 0.0};
    return t;
}

CostTerm CostTerm::filtered_peak(std::vector<double> taps, double a) {
    if (taps.empty()) throw Error("filtered peak needs at least one tap");
    if (taps.front() == 0.0) throw ZeroLeadingTap("leading filter tap h0 must be nonzero");
    if (!(a > 0)) throw Error("filtered peak requires amplitude A > 0");
    CostTerm t;
    t.kind = CostKind::filtered_peak;
    t.window = static_cast<int>(taps.size());
    t.taps = std::move(taps);
    t.amplitude = a;
    t.limit = 0.0;
    return t;
}

CostTerm CostTerm::custom(WindowFn fn, int m, double g, GrowthCertificate growth, Mode mode) {
    if (!fn) throw Error("custom cost needs a function");
    if (m < 1) throw Error("window size must be >= 1");
    CostTerm t;
    t.kind = CostKind::custom;
    t.fn = std::move(fn);
    t.window = m;
    t.limit = g;
    t.mode = mode;
    t.growth = growth;
    return t;
}

double evaluate_cost(const CostTerm& term, std::span<const double> window) {
    if (static_cast<int>(window.size()) != term.window)
        throw WindowMismatch("cost expects a window of length " + std::to_string(term.window) +
                             ", got " + std::to_string(window.size()));
    switch (term.kind) {
        case CostKind::power:
            return window[0] * window[0];
        case CostKind::absolute:
            return std::abs(window[0]);
        case CostKind::peak_well:
            return std::abs(window[0]) <= term.amplitude ? 0.0 : numerics::inf;
        case CostKind::moment:
            return std::pow(std::abs(window[0]), term.exponent);
        case CostKind::correlation:
            // window is (x_{t-lag}, ..., x_t)
            return window.back() * window.front();
        case CostKind::window_avg_power: {
            double s = 0;
            for (double v : window) s += v * v;
            return s / term.window;
        }
        case CostKind::filtered_peak: {
            // y_t = sum_i h_i x_{t-i}; window is time-ordered oldest first.
            double y = 0;
            const int m = term.window;
            for (int i = 0; i < m; ++i) y += term.taps[i] * window[m - 1 - i];
            return std::abs(y) <= term.amplitude ? 0.0 : numerics::inf;
        }
        case CostKind::custom:
            return term.fn(window);
    }
    throw Error("unreachable cost kind");
}

Support effective_support(std::span<const CostTerm> terms) {
    Interval iv = Interval::real();
    for (const CostTerm& t : terms) {
        if (t.kind == CostKind::peak_well) {
            iv.lo = std::max(iv.lo, -t.amplitude);
            iv.hi = std::min(iv.hi, t.amplitude);
        }
    }
    if (!(iv.lo < iv.hi)) throw EmptySupport("peak wells intersect to an empty interval");
    return iv;
}

Support effective_support(std::span<const CostTerm> terms, const FinitePointSet& alphabet) {
    const Support base = effective_support(terms);
    const Interval iv = std::get<Interval>(base);
    FinitePointSet out;
    for (double p : alphabet.points)
        if (iv.contains(p)) out.points.push_back(p);
    std::sort(out.points.begin(), out.points.end());
    out.points.erase(std::unique(out.points.begin(), out.points.end()), out.points.end());
    if (out.points.empty())
        throw EmptySupport("declared alphabet has no point inside the peak wells");
    return out;
}

ConstraintSet::ConstraintSet(std::vector<CostTerm> terms) : terms_(std::move(terms)) {
    if (terms_.empty()) throw Error("constraint set needs at least one term");
    support_ = effective_support(terms_);
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        max_window_ = std::max(max_window_, terms_[j].window);
        if (!terms_[j].is_well()) dual_indices_.push_back(j);
    }
}

ConstraintSet::ConstraintSet(std::vector<CostTerm> terms, FinitePointSet alphabet)
    : terms_(std::move(terms)) {
    if (terms_.empty()) throw Error("constraint set needs at least one term");
    support_ = effective_support(terms_, alphabet);
    for (std::size_t j = 0; j < terms_.size(); ++j) {
        max_window_ = std::max(max_window_, terms_[j].window);
        if (!terms_[j].is_well()) dual_indices_.push_back(j);
    }
}

bool ConstraintSet::has_finite_support() const {
    if (std::holds_alternative<FinitePointSet>(support_)) return true;
    return std::get<Interval>(support_).finite();
}

Interval ConstraintSet::support_interval() const {
    if (!std::holds_alternative<Interval>(support_))
        throw Error("support is a finite point set, not an interval");
    return std::get<Interval>(support_);
}

bool is_feasible(const ConstraintSet& cs, std::span<const double> x) {
    const auto n = static_cast<double>(x.size());
    if (static_cast<int>(x.size()) < cs.max_window()) return false;
    for (const CostTerm& term : cs.terms()) {
        const int m = term.window;
        double sum = 0;
        for (std::size_t t = m - 1; t < x.size(); ++t) {
            const double c = evaluate_cost(term, x.subspan(t - (m - 1), m));
            if (c == numerics::inf) return false;
            sum += c;
        }
        // Both modes share the numerical slack so that equality-mode
        // feasibility implies inequality-mode feasibility.
        const double slack = 1e-9 * n;
        if (sum > n * term.limit + slack) return false;
        if (term.mode == Mode::equality && sum < n * term.limit - slack) return false;
    }
    return true;
}

}  // namespace capbound::constraints
