#include "capbound/epi.hpp"

#include <algorithm>
#include <cmath>

namespace capbound::epi {

using numerics::Interval;

EpiBound epi_bound(double v, double sigma2) {
    if (!(sigma2 > 0)) throw NonFinite("noise variance must be positive");
    EpiBound b;
    b.v_used = v;
    if (v == -numerics::inf) {
        b.value = 0.0;  // empty interior
        return b;
    }
    b.value = 0.5 * std::log1p(std::exp(2.0 * v) / (numerics::two_pi_e * sigma2));
    return b;
}

namespace {

// inf over s > 0 of exp-family objectives that may plateau at the left edge.
// Returns the smaller of the numeric interior minimum and the analytic
// s -> 0 limit.
struct EdgeInf {
    double value;
    bool at_edge;
};

EdgeInf edge_infimum(const numerics::Fn& f, double limit_at_zero, double hi) {
    numerics::ScalarMinimum m = numerics::minimize_scalar(f, {1e-8, hi}, 1e-12);
    if (limit_at_zero <= m.value) return {limit_at_zero, true};
    return {m.value, m.at_lower};
}

}  // namespace

double snr_loss_factor(double ratio) {
    if (!(ratio > 0)) throw NonFinite("A^2/P must be positive");
    const double u = ratio;
    auto f = [u](double s) {
        // 1 - 2Q(z) = erf(z / sqrt(2)), stable for small z
        const double b = std::erf(std::sqrt(u * s) * 0.7071067811865475244);
        return std::exp(s - 1.0) / s * b * b;
    };
    // s -> 0: [1 - 2Q(sqrt(us))]^2 ~ 2us/pi, so the objective tends to
    // 2u / (pi e); this edge is the infimum exactly when the average-power
    // constraint is slack.
    const double limit0 = 2.0 * u / (numerics::pi * std::exp(1.0));
    EdgeInf inf = edge_infimum(f, limit0, 50.0);
    return std::min(inf.value, 1.0);
}

EpiBound epi_peak_power(double p, double a, double sigma2) {
    if (!(p > 0) || !(a > 0) || !(sigma2 > 0))
        throw NonFinite("epi_peak_power needs positive P, A, sigma^2");
    const double u = a * a / p;
    const double lambda = snr_loss_factor(u);
    EpiBound b;
    b.loss_factor = lambda;
    b.plateau = (u <= 3.0);
    b.v_used = 0.5 * std::log(numerics::two_pi_e * p * lambda);
    b.value = 0.5 * std::log1p(p / sigma2 * lambda);
    return b;
}

EpiBound epi_quadrature(double p, double a, double sigma2) {
    if (!(p > 0) || !(a > 0) || !(sigma2 > 0))
        throw NonFinite("epi_quadrature needs positive P, A, sigma^2");
    const double c = a * a / (2.0 * p);
    auto f = [c](double s) { return std::exp(s - 1.0) / s * -std::expm1(-c * s); };
    const double limit0 = c / std::exp(1.0);  // s -> 0 edge
    EdgeInf inf = edge_infimum(f, limit0, 50.0);
    EpiBound b;
    b.loss_factor = inf.value;
    b.plateau = inf.at_edge;
    b.v_used = 0.5 * std::log(numerics::two_pi_e * p * inf.value);
    b.value = 0.5 * std::log1p(p / sigma2 * inf.value);
    return b;
}

double PiecewiseBound::operator()(double gamma) const {
    if (tangent_found) {
        if (gamma <= breakpoint) return slope * gamma;
        return original(gamma);
    }
    if (already_concave || hull_x.empty()) return original(gamma);
    if (gamma <= hull_x.front()) return hull_y.front();
    if (gamma >= hull_x.back()) return hull_y.back();
    const auto it = std::upper_bound(hull_x.begin(), hull_x.end(), gamma);
    const std::size_t hi = it - hull_x.begin();
    const std::size_t lo = hi - 1;
    const double t = (gamma - hull_x[lo]) / (hull_x[hi] - hull_x[lo]);
    return (1.0 - t) * hull_y[lo] + t * hull_y[hi];
}

PiecewiseBound uce_1d(const std::function<double(double)>& bound, Interval range, int samples) {
    if (!range.finite() || !(range.lo >= 0) || !(range.hi > range.lo))
        throw NonFinite("uce_1d needs a finite range inside [0, inf)");
    if (samples < 8) samples = 8;

    PiecewiseBound out;
    out.original = bound;

    auto deriv = [&](double g) {
        const double h = std::max(1e-6 * g, 1e-9);
        return (bound(g + h) - bound(g - h)) / (2.0 * h);
    };
    // Tangent-from-origin condition Gamma C'(Gamma) = C(Gamma). At the sought
    // root, r(Gamma) = Gamma C' - C crosses from + to -.
    auto r = [&](double g) { return g * deriv(g) - bound(g); };

    const double lo = std::max(range.lo, 1e-6 * range.hi);
    double a = lo, b = range.hi;
    double ra = r(a), rb = r(b);
    bool bracketed = (ra > 0 && rb < 0);
    if (!bracketed) {
        // scan for a sign change
        const int ns = 64;
        double prev_x = a, prev_r = ra;
        for (int i = 1; i <= ns; ++i) {
            const double x = lo * std::pow(range.hi / lo, static_cast<double>(i) / ns);
            const double rx = r(x);
            if (prev_r > 0 && rx <= 0) {
                a = prev_x;
                b = x;
                bracketed = true;
                break;
            }
            prev_x = x;
            prev_r = rx;
        }
    }
    if (bracketed) {
        for (int it = 0; it < 200; ++it) {
            const double m = 0.5 * (a + b);
            if ((r(m) > 0)) a = m; else b = m;
            if (b - a <= 1e-12 * std::max(1.0, b)) break;
        }
        const double gstar = 0.5 * (a + b);
        const double cstar = bound(gstar);
        out.tangent_found = true;
        out.breakpoint = gstar;
        out.slope = cstar / gstar;
        // A concave bound has no interior tangent through the origin beyond
        // numerical noise; treat a vanishing linear region as "unchanged".
        if (gstar <= lo * 1.01) {
            out.tangent_found = false;
            out.breakpoint = 0;
        }
        if (out.tangent_found) return out;
    }

    // Fallback: discrete concave majorant (upper hull) of the sampled curve,
    // flagged by tangent_found = false.
    std::vector<double> xs(samples), ys(samples);
    for (int i = 0; i < samples; ++i) {
        xs[i] = range.lo + (range.hi - range.lo) * i / (samples - 1.0);
        ys[i] = bound(xs[i]);
    }
    std::vector<std::size_t> hull;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        while (hull.size() >= 2) {
            const std::size_t p = hull[hull.size() - 1], q = hull[hull.size() - 2];
            const double cross = (xs[p] - xs[q]) * (ys[i] - ys[q]) -
                                 (ys[p] - ys[q]) * (xs[i] - xs[q]);
            if (cross >= 0) hull.pop_back();  // keep the upper (concave) chain
            else break;
        }
        hull.push_back(i);
    }
    for (std::size_t i : hull) {
        out.hull_x.push_back(xs[i]);
        out.hull_y.push_back(ys[i]);
    }
    out.already_concave = (hull.size() == xs.size());
    return out;
}

}  // namespace capbound::epi
