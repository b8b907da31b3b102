#pragma once

#include <cmath>
#include <functional>
#include <limits>
#include <span>
#include <vector>

#include "capbound/errors.hpp"

namespace capbound::numerics {

inline constexpr double inf = std::numeric_limits<double>::infinity();
inline constexpr double pi = 3.14159265358979323846;
inline constexpr double two_pi_e = 17.07946844534713413092;  // 2*pi*e
inline constexpr double half_log_two_pi_e = 1.41893853320467274178;

// Integration / optimization domain. Either endpoint may be infinite.
struct Interval {
    double lo = -inf;
    double hi = inf;

    bool finite() const { return std::isfinite(lo) && std::isfinite(hi); }
    double length() const { return hi - lo; }
    bool contains(double x) const { return x >= lo && x <= hi; }

    static Interval real() { return {-inf, inf}; }
    static Interval symmetric(double a) { return {-a, a}; }
};

struct QuadratureSpec {
    double rel_tol = 1e-9;
    double abs_tol = 1e-12;
    int max_subdivisions = 2000;
};

using Fn = std::function<double(double)>;

// Upper tail of the standard normal: Q(u) = int_u^inf exp(-x^2/2)/sqrt(2*pi) dx.
// Total on the extended reals.
double q_function(double u);

// Pr{l <= Z <= u} for a standard normal, computed without cancellation for
// intervals far out in either tail.
double normal_interval_mass(double l, double u);

// Hyperbolic sine integral Shi(z) = int_0^z sinh(u)/u du, z >= 0.
// Series for small z, quadrature beyond; overflows to +inf near z ~ 700
// (use log_shi there).
double shi(double z);

// log Shi(z), finite for all z >= 0 where Shi itself may overflow.
double log_shi(double z);

struct QuadratureResult {
    double value = 0;
    double error = 0;
    std::size_t evals = 0;
};

// Adaptive Gauss-Kronrod integration of f over domain. Infinite domains are
// mapped onto a bounded parameter range before subdivision. Throws
// DivergentIntegral when the refinement budget is exhausted.
QuadratureResult integrate(const Fn& f, Interval domain, const QuadratureSpec& spec = {});

// log int exp{g(x)} dx with max-shift stabilization. `peak_hints` seeds the
// shift search with known near-maximum locations.
double log_int_exp(const Fn& g, Interval domain, const QuadratureSpec& spec = {});
double log_int_exp(const Fn& g, Interval domain, const QuadratureSpec& spec,
                   std::span<const double> peak_hints);

struct ScalarMinimum {
    double argmin = 0;
    double value = 0;
    bool at_lower = false;
    bool at_upper = false;
    std::size_t evals = 0;
};

// Golden-section / parabolic (Brent) refinement of a unimodal f on a finite
// bracket. Edge minima are returned at the bracket edge and flagged. Throws
// NonFinite if f returns NaN inside the bracket.
ScalarMinimum minimize_scalar(const Fn& f, Interval bracket, double tol = 1e-10);

enum class SignDomain { positive, free_sign };

struct ConvexMinimum {
    std::vector<double> argmin;
    double value = 0;
    std::vector<bool> active;  // false once a positive coordinate collapses below threshold
    std::size_t evals = 0;
    bool converged = true;
};

// Threshold under which a sign-constrained coordinate is reported inactive.
inline constexpr double inactive_threshold = 1e-10;

// Minimizes a smooth convex f over the sign-constrained domain. Positive
// coordinates are parameterized as exponentials, so the constraint boundary
// becomes an asymptote and inactivity is a threshold test. Throws Unbounded
// when f decreases without bound.
ConvexMinimum minimize_convex(const std::function<double(std::span<const double>)>& f,
                              int dim,
                              std::span<const SignDomain> sign_domain,
                              std::span<const double> init,
                              double tol = 1e-10);

// Gauss-Legendre nodes and weights on [-1, 1] (Newton on the Legendre
// recurrence), and the affine rescaling onto an arbitrary finite interval.
void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights);
void gauss_legendre(int n, Interval iv, std::vector<double>& nodes, std::vector<double>& weights);

// Natural cubic spline through strictly increasing abscissae; evaluation
// clamps to the edge values outside the node range.
class CubicSpline {
public:
    CubicSpline() = default;
    CubicSpline(std::vector<double> x, std::vector<double> y);

    double operator()(double x) const;
    bool empty() const { return x_.empty(); }

private:
    std::vector<double> x_, y_, m_;  // m_: second derivatives
};

}  // namespace capbound::numerics
