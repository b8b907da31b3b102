#pragma once

#include <functional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include "capbound/numerics.hpp"

namespace capbound::constraints {

enum class CostKind {
    power,             // x^2
    absolute,          // |x|
    peak_well,         // 0 on [-A, A], +inf outside
    moment,            // |x|^p
    correlation,       // x_t * x_{t-lag}
    window_avg_power,  // (sum of squares over the window) / m
    filtered_peak,     // 0 / +inf on |sum h_i x_{t-i}| vs A
    custom,
};

enum class Mode { inequality, equality };

// Even-polynomial lower bound phi(x) >= coeff * |x|^degree - offset, declared
// for custom costs so integrability of the partition function can be
// pre-checked before quadrature.
struct GrowthCertificate {
    double coeff = 0.0;
    int degree = 0;
    double offset = 0.0;
};

using WindowFn = std::function<double(std::span<const double>)>;

// One cost function phi_j with its limit, mode, and window size.
struct CostTerm {
    CostKind kind = CostKind::power;
    double limit = 0.0;  // Gamma_j
    Mode mode = Mode::inequality;
    int window = 1;  // m

    double amplitude = 0.0;        // peak_well / filtered_peak
    double exponent = 2.0;         // moment
    int lag = 0;                   // correlation
    std::vector<double> taps;      // filtered_peak
    WindowFn fn;                   // custom
    GrowthCertificate growth;      // custom integrability certificate

    bool is_well() const { return kind == CostKind::peak_well; }

    static CostTerm power(double p, Mode mode = Mode::inequality);
    static CostTerm absolute(double g, Mode mode = Mode::inequality);
    static CostTerm peak_well(double a);
    static CostTerm moment(double p, double g, Mode mode = Mode::inequality);
    static CostTerm correlation(int lag, double r, Mode mode = Mode::inequality);
    static CostTerm window_avg_power(int m, double p, Mode mode = Mode::inequality);
    static CostTerm filtered_peak(std::vector<double> taps, double a);
    static CostTerm custom(WindowFn fn, int m, double g, GrowthCertificate growth,
                           Mode mode = Mode::inequality);
};

// phi_j applied to one window (x_{t-m+1}, ..., x_t). May return +inf.
// Throws WindowMismatch when the window length is wrong.
double evaluate_cost(const CostTerm& term, std::span<const double> window);

struct FinitePointSet {
    std::vector<double> points;  // sorted, distinct
};

using Support = std::variant<numerics::Interval, FinitePointSet>;

struct ChannelParams {
    double noise_var = 1.0;  // sigma^2 > 0
};

// Ordered collection of cost terms plus the derived single-letter support.
// Peak wells are folded into the support and excluded from the dual vector.
// Immutable after construction.
class ConstraintSet {
public:
    explicit ConstraintSet(std::vector<CostTerm> terms);
    ConstraintSet(std::vector<CostTerm> terms, FinitePointSet alphabet);

    const std::vector<CostTerm>& terms() const { return terms_; }
    const Support& support() const { return support_; }
    int max_window() const { return max_window_; }

    // Indices of the terms that carry a dual coordinate (everything but the
    // peak wells, whose multiplier is absorbed by the support restriction).
    const std::vector<std::size_t>& dual_indices() const { return dual_indices_; }
    std::size_t dual_size() const { return dual_indices_.size(); }
    const CostTerm& dual_term(std::size_t i) const { return terms_[dual_indices_[i]]; }

    bool has_finite_support() const;
    numerics::Interval support_interval() const;  // throws if the support is a point set

private:
    std::vector<CostTerm> terms_;
    Support support_;
    std::vector<std::size_t> dual_indices_;
    int max_window_ = 1;
};

// Effective single-letter support: intersection of the peak-well intervals
// (default the whole line), or the declared finite alphabet filtered by the
// wells. Throws EmptySupport when the intersection is empty.
Support effective_support(std::span<const CostTerm> terms);
Support effective_support(std::span<const CostTerm> terms, const FinitePointSet& alphabet);

// True iff x of length n >= max_window satisfies every constraint
// sum_{t=m}^{n} phi_j(window_t) <= n * Gamma_j (equality terms within
// 1e-9 * n in both directions).
bool is_feasible(const ConstraintSet& cs, std::span<const double> x);

}  // namespace capbound::constraints
