#include "capbound/direct_mi.hpp"

#include <algorithm>
#include <cmath>

namespace capbound::direct_mi {

using constraints::CostKind;
using constraints::CostTerm;
using constraints::FinitePointSet;
using constraints::Mode;
using numerics::Interval;
using numerics::QuadratureSpec;
using volume::DualVector;
using volume::TiltedDensity;

namespace {

constexpr double half_log_2pi = 0.91893853320467274178;

bool window_one(const ConstraintSet& cs) {
    for (std::size_t i = 0; i < cs.dual_size(); ++i)
        if (cs.dual_term(i).window != 1) return false;
    return true;
}

// Collapses the dual onto a single squared-amplitude tilt when possible.
bool pure_power_tilt(const ConstraintSet& cs, std::span<const double> theta, double* theta_eff) {
    double t = 0;
    for (std::size_t i = 0; i < cs.dual_size(); ++i) {
        if (cs.dual_term(i).kind == CostKind::power)
            t += theta[i];
        else if (theta[i] != 0.0)
            return false;
    }
    *theta_eff = t;
    return true;
}

double letter_cost(const ConstraintSet& cs, std::span<const double> theta, double x) {
    double g = 0;
    const double w[1] = {x};
    for (std::size_t i = 0; i < cs.dual_size(); ++i)
        g += theta[i] * constraints::evaluate_cost(cs.dual_term(i), w);
    return g;
}

// Closed form for log zeta with a squared-amplitude tilt on [-A, A]:
//   -0.5 log(1 + 2 theta sigma^2) - theta y^2 / (1 + 2 theta sigma^2)
//   + log[1 - Q((A - m(y))/s) - Q((A + m(y))/s)],
// with m(y) = y / (1 + 2 theta sigma^2) and s = sigma / sqrt(1 + 2 theta sigma^2).
double log_zeta_power(double theta, double half_width, double y, double sigma2) {
    const double denom = 1.0 + 2.0 * theta * sigma2;
    const double head = -0.5 * std::log(denom) - theta * y * y / denom;
    if (half_width == numerics::inf) return head;
    const double m = y / denom;
    const double s = std::sqrt(sigma2 / denom);
    // mass of N(m, s^2) on [-A, A]: 1 - Q((A - m)/s) - Q((A + m)/s)
    const double bracket =
        numerics::normal_interval_mass((-half_width - m) / s, (half_width - m) / s);
    if (!(bracket > 0)) return -numerics::inf;
    return head + std::log(bracket);
}

double log_zeta_values(const ConstraintSet& cs, std::span<const double> theta, double y,
                       double sigma2, const QuadratureSpec& spec) {
    if (!(sigma2 > 0)) throw NonFinite("noise variance must be positive");
    if (!window_one(cs))
        throw UnsupportedKernel("zeta is defined for memoryless constraint sets");

    if (const auto* pts = std::get_if<FinitePointSet>(&cs.support())) {
        double best = -numerics::inf;
        std::vector<double> lw(pts->points.size());
        for (std::size_t i = 0; i < lw.size(); ++i) {
            const double x = pts->points[i];
            lw[i] = -letter_cost(cs, theta, x) - (y - x) * (y - x) / (2.0 * sigma2) -
                    half_log_2pi - 0.5 * std::log(sigma2);
            best = std::max(best, lw[i]);
        }
        if (best == -numerics::inf) return best;
        double s = 0;
        for (double v : lw) s += std::exp(v - best);
        return best + std::log(s);
    }

    const Interval iv = std::get<Interval>(cs.support());
    double theta_eff = 0;
    if (pure_power_tilt(cs, theta, &theta_eff) && 1.0 + 2.0 * theta_eff * sigma2 > 0 &&
        iv.hi == -iv.lo) {
        return log_zeta_power(theta_eff, iv.hi, y, sigma2);
    }
    auto g = [&](double x) {
        return -letter_cost(cs, theta, x) - (y - x) * (y - x) / (2.0 * sigma2);
    };
    const double hint[1] = {std::clamp(y, iv.lo, iv.hi)};
    return numerics::log_int_exp(g, iv, spec, hint) - half_log_2pi - 0.5 * std::log(sigma2);
}

}  // namespace

double log_zeta(const ConstraintSet& cs, const DualVector& theta, double y, double sigma2,
                const QuadratureSpec& spec) {
    if (theta.size() != cs.dual_size()) throw Error("dual vector length mismatch");
    return log_zeta_values(cs, theta.values, y, sigma2, spec);
}

double zeta(const ConstraintSet& cs, const DualVector& theta, double y, double sigma2,
            const QuadratureSpec& spec) {
    return std::exp(log_zeta(cs, theta, y, sigma2, spec));
}

volume::TiltedDensity asymptotic_input_marginal(const ConstraintSet& cs,
                                                const volume::VolumeOptions& opts) {
    volume::VolumeReport vr = volume::volume_exponent(cs, opts);
    DualVector theta = vr.theta_star;

    // Power + peak: refine the tilt on the monotone second-moment map so the
    // moment equation holds to full precision (theta = 0 when P >= A^2/3).
    const bool power_well = cs.dual_size() == 1 &&
                            cs.dual_term(0).kind == CostKind::power &&
                            cs.dual_term(0).mode == Mode::inequality &&
                            std::holds_alternative<Interval>(cs.support());
    if (power_well) {
        const double p = cs.dual_term(0).limit;
        const Interval iv = std::get<Interval>(cs.support());
        auto moment = [&](double t) {
            DualVector dv{{t}, {numerics::SignDomain::positive}};
            return volume::tilted_moments(cs, dv, opts.quad)[0];
        };
        const double uniform_moment =
            iv.finite() ? moment(0.0) : numerics::inf;
        if (iv.finite() && p >= uniform_moment * (1.0 - 1e-9)) {
            theta.values[0] = 0.0;
        } else {
            double lo = 0.0, hi = std::max(1.0 / (2.0 * p), 1e-6);
            while (moment(hi) > p) hi *= 2.0;
            for (int it = 0; it < 200 && hi - lo > 1e-14 * hi; ++it) {
                const double mid = 0.5 * (lo + hi);
                if (moment(mid) > p) lo = mid; else hi = mid;
            }
            theta.values[0] = 0.5 * (lo + hi);
        }
    }
    return TiltedDensity(cs, theta, opts.quad);
}

double OutputDensity::log_pdf(double y) const {
    if (closed_form)
        return log_zeta_power(theta, half_width, y, sigma2) - input_log_norm;
    if (!y_window.contains(y)) return -numerics::inf;
    return log_grid(y);
}

OutputDensity output_marginal(const TiltedDensity& input, double sigma2,
                              const QuadratureSpec& spec) {
    if (!(sigma2 > 0)) throw NonFinite("noise variance must be positive");
    OutputDensity out;
    out.sigma2 = sigma2;
    const double sigma = std::sqrt(sigma2);

    const auto* iv = std::get_if<Interval>(&input.support());
    const double var_x = input.second_moment(spec);

    if (input.is_power_tilt() && iv && iv->hi == -iv->lo &&
        1.0 + 2.0 * input.power_theta() * sigma2 > 0) {
        out.closed_form = true;
        out.theta = input.power_theta();
        out.half_width = iv->hi;
        out.input_log_norm = input.log_normalizer();
        out.variance = var_x + sigma2;
        const double hw = iv->finite() ? iv->hi + 8.0 * sigma : 8.0 * std::sqrt(out.variance);
        out.y_window = Interval::symmetric(hw);
    } else {
        out.closed_form = false;
        out.variance = var_x + sigma2;  // mean-zero input (even cost functions)
        double hw;
        if (iv && iv->finite())
            hw = std::max(std::abs(iv->lo), std::abs(iv->hi)) + 8.0 * sigma;
        else if (const auto* pts = std::get_if<FinitePointSet>(&input.support()))
            hw = std::max(std::abs(pts->points.front()), std::abs(pts->points.back())) +
                 8.0 * sigma;
        else
            hw = 8.0 * std::sqrt(out.variance);
        out.y_window = Interval::symmetric(hw);

        const int n = 1025;
        std::vector<double> ys(n), lp(n);
        for (int i = 0; i < n; ++i) {
            const double y = out.y_window.lo + out.y_window.length() * i / (n - 1.0);
            ys[i] = y;
            if (const auto* pts = std::get_if<FinitePointSet>(&input.support())) {
                double best = -numerics::inf;
                std::vector<double> lw(pts->points.size());
                for (std::size_t j = 0; j < lw.size(); ++j) {
                    const double x = pts->points[j];
                    lw[j] = std::log(input.masses()[j]) -
                            (y - x) * (y - x) / (2.0 * sigma2) - half_log_2pi -
                            0.5 * std::log(sigma2);
                    best = std::max(best, lw[j]);
                }
                double s = 0;
                for (double v : lw) s += std::exp(v - best);
                lp[i] = best + std::log(s);
            } else {
                auto g = [&](double x) {
                    return input.log_density(x) - (y - x) * (y - x) / (2.0 * sigma2);
                };
                const double hint[1] = {std::clamp(y, iv->lo, iv->hi)};
                lp[i] = numerics::log_int_exp(g, *iv, spec, hint) - half_log_2pi -
                        0.5 * std::log(sigma2);
            }
        }
        out.log_grid = numerics::CubicSpline(std::move(ys), std::move(lp));
    }

    // Normalization recheck and a symmetry probe.
    const auto norm =
        numerics::integrate([&](double y) { return out.pdf(y); }, out.y_window, spec);
    out.norm_error = std::abs(norm.value - 1.0);
    out.symmetric = true;
    for (double y : {0.3 * out.y_window.hi, 0.7 * out.y_window.hi}) {
        const double l = out.log_pdf(-y), r = out.log_pdf(y);
        if (std::abs(l - r) > 1e-7 * (1.0 + std::abs(l))) out.symmetric = false;
    }
    return out;
}

namespace {

double expected_log_zeta(const ConstraintSet& cs, std::span<const double> theta,
                         const OutputDensity& py, double sigma2, const QuadratureSpec& spec) {
    auto f = [&](double y) {
        const double lz = log_zeta_values(cs, theta, y, sigma2, spec);
        const double p = py.pdf(y);
        return p == 0.0 ? 0.0 : p * lz;
    };
    return numerics::integrate(f, py.y_window, spec).value;
}

}  // namespace

DirectBoundReport direct_bound(const ConstraintSet& cs, double sigma2,
                               const DirectBoundOptions& opts) {
    if (!(sigma2 > 0)) throw NonFinite("noise variance must be positive");
    if (!window_one(cs))
        throw UnsupportedKernel("the direct bound handles memoryless constraint sets");

    volume::VolumeReport vr = volume::volume_exponent(cs, opts.volume);
    TiltedDensity input = asymptotic_input_marginal(cs, opts.volume);
    OutputDensity py = output_marginal(input, sigma2, opts.quad);

    const DualVector init = volume::default_dual(cs);
    auto objective = [&](std::span<const double> t) {
        double val = 0;
        for (std::size_t i = 0; i < cs.dual_size(); ++i)
            val += t[i] * cs.dual_term(i).limit;
        try {
            return val + expected_log_zeta(cs, t, py, sigma2, opts.quad);
        } catch (const DivergentIntegral&) {
            return numerics::inf;
        }
    };
    const std::vector<bool> pins = volume::degenerate_duals(cs);
    volume::DualSolve s =
        volume::minimize_dual_objective(objective, init, opts.opt_tol, pins);
    if (!std::isfinite(s.value)) throw Infeasible("no admissible dual for the zeta infimum");

    DirectBoundReport r;
    r.v_used = vr.v;
    r.value = vr.v - 0.5 * std::log(numerics::two_pi_e * sigma2) - s.value;
    r.theta_star_volume = vr.theta_star;
    r.volume_active = vr.active;
    r.theta_star_bound.values = s.theta;
    r.theta_star_bound.sign_domain = init.sign_domain;
    r.bound_active = s.active;
    r.diagnostics.y_half_width = py.y_window.hi;
    r.diagnostics.output_norm_error = py.norm_error;
    r.diagnostics.dual_inf = s.value;
    r.diagnostics.objective_evals = s.evals;
    return r;
}

double log_j_integral(double a, double b, double half_width, const QuadratureSpec& spec) {
    const double A = half_width;
    if (!(A > 0)) throw NonFinite("J(a, b) needs a positive half-width");
    if (a < 0) {
        const double c = -a;
        const double mu = b / (2.0 * c);
        const double scale = std::sqrt(2.0 * c);
        const double bracket =
            numerics::normal_interval_mass(scale * (-A - mu), scale * (A - mu));
        if (bracket > 0)
            return b * b / (4.0 * c) + 0.5 * std::log(numerics::pi / c) + std::log(bracket);
        // Tails cancelled to zero in doubles; fall through to quadrature.
    }
    const double hint[1] = {std::clamp(b >= 0 ? A : -A, -A, A)};
    return numerics::log_int_exp([&](double x) { return a * x * x + b * x; },
                                 Interval::symmetric(A), spec, hint);
}

DirectBoundReport tilted_direct_bound(TiltedInputSpec& spec, double sigma2,
                                      const DirectBoundOptions& opts) {
    const double A = spec.half_width;
    const double P = spec.power;
    const double alpha = spec.alpha;
    if (!(A > 0) || !(P > 0) || !(sigma2 > 0))
        throw NonFinite("tilted bound needs positive A, P, sigma^2");

    // theta-part of the normalizer: inf_{theta >= 0} {theta P + log J(alpha - theta, 0)}.
    const DualVector init{{std::max(1.0 / (2.0 * P), alpha + 1e-3)},
                          {numerics::SignDomain::positive}};
    auto b_obj = [&](std::span<const double> t) {
        return t[0] * P + log_j_integral(alpha - t[0], 0.0, A, opts.quad);
    };
    volume::DualSolve bsol = volume::minimize_dual_objective(b_obj, init, opts.opt_tol);
    const double theta_star = bsol.theta[0];
    spec.theta_star = theta_star;
    const double a0 = alpha - theta_star;
    const double log_j0 = log_j_integral(a0, 0.0, A, opts.quad);

    // Second moment of the tilted input.
    const double ex2 =
        numerics::integrate(
            [&](double x) { return x * x * std::exp(a0 * x * x - log_j0); },
            Interval::symmetric(A), opts.quad)
            .value;

    // Output marginal induced by the tilted input.
    const double aj = a0 - 1.0 / (2.0 * sigma2);
    auto log_py = [&](double y) {
        return -y * y / (2.0 * sigma2) - half_log_2pi - 0.5 * std::log(sigma2) - log_j0 +
               log_j_integral(aj, y / sigma2, A, opts.quad);
    };
    const Interval ywin = Interval::symmetric(A + 8.0 * std::sqrt(sigma2));

    auto outer = [&](std::span<const double> t) {
        const double av = alpha - 1.0 / (2.0 * sigma2) - t[0];
        auto f = [&](double y) {
            return std::exp(log_py(y)) * log_j_integral(av, y / sigma2, A, opts.quad);
        };
        return t[0] * P + numerics::integrate(f, ywin, opts.quad).value;
    };
    volume::DualSolve osol = volume::minimize_dual_objective(outer, init, opts.opt_tol);

    DirectBoundReport r;
    r.v_used = bsol.value;
    r.value = bsol.value + ex2 / (2.0 * sigma2) - osol.value;
    r.theta_star_volume.values = {theta_star};
    r.theta_star_volume.sign_domain = {numerics::SignDomain::positive};
    r.volume_active = bsol.active;
    r.theta_star_bound.values = {osol.theta[0]};
    r.theta_star_bound.sign_domain = {numerics::SignDomain::positive};
    r.bound_active = osol.active;
    r.diagnostics.y_half_width = ywin.hi;
    r.diagnostics.dual_inf = osol.value;
    r.diagnostics.objective_evals = bsol.evals + osol.evals;
    return r;
}

DirectBoundReport jensen_pair_bound(const ConstraintSet& cs, double sigma2, double s2,
                                    double alpha, const DirectBoundOptions& opts) {
    if (!(sigma2 > 0) || !(s2 > 0)) throw NonFinite("jensen bound needs sigma^2, s^2 > 0");
    if (!window_one(cs))
        throw UnsupportedKernel("the pair bound handles memoryless constraint sets");

    volume::VolumeReport vr = volume::volume_exponent(cs, opts.volume);
    TiltedDensity input = asymptotic_input_marginal(cs, opts.volume);
    const double ex2 = input.second_moment(opts.quad);

    const double denom = 2.0 * (sigma2 + s2);
    const std::size_t k = cs.dual_size();

    QuadratureSpec inner = opts.quad;
    inner.rel_tol *= 0.1;
    inner.abs_tol *= 0.1;

    auto log_pair_z = [&](std::span<const double> t1, std::span<const double> t2) {
        if (const auto* pts = std::get_if<FinitePointSet>(&cs.support())) {
            double best = -numerics::inf;
            std::vector<double> lw;
            lw.reserve(pts->points.size() * pts->points.size());
            for (double x2 : pts->points)
                for (double x1 : pts->points) {
                    const double d = x1 - alpha * x2;
                    lw.push_back(-letter_cost(cs, t1, x1) - letter_cost(cs, t2, x2) -
                                 d * d / denom);
                    best = std::max(best, lw.back());
                }
            double s = 0;
            for (double v : lw) s += std::exp(v - best);
            return best + std::log(s);
        }
        const Interval iv = std::get<Interval>(cs.support());
        double th1 = 0;
        const bool inner_closed =
            pure_power_tilt(cs, t1, &th1) && iv.finite() && iv.hi == -iv.lo;
        auto outer_fn = [&](double x2) {
            const double c = alpha * x2;
            double inner_val;
            if (inner_closed) {
                // -th1 x1^2 - (x1 - c)^2/denom completes to a J(a, b) form
                inner_val = log_j_integral(-th1 - 1.0 / denom, 2.0 * c / denom, iv.hi,
                                           inner) -
                            c * c / denom;
            } else {
                auto inner_fn = [&](double x1) {
                    const double d = x1 - c;
                    return -letter_cost(cs, t1, x1) - d * d / denom;
                };
                const double hint[1] = {std::clamp(c, iv.lo, iv.hi)};
                inner_val = numerics::log_int_exp(inner_fn, iv, inner, hint);
            }
            return -letter_cost(cs, t2, x2) + inner_val;
        };
        return numerics::log_int_exp(outer_fn, iv, opts.quad);
    };

    DualVector base = volume::default_dual(cs);
    DualVector init;
    init.values = base.values;
    init.sign_domain = base.sign_domain;
    init.values.insert(init.values.end(), base.values.begin(), base.values.end());
    init.sign_domain.insert(init.sign_domain.end(), base.sign_domain.begin(),
                            base.sign_domain.end());

    auto objective = [&](std::span<const double> t) {
        double val = 0;
        for (std::size_t i = 0; i < k; ++i)
            val += (t[i] + t[k + i]) * cs.dual_term(i).limit;
        try {
            return val + log_pair_z(t.subspan(0, k), t.subspan(k, k));
        } catch (const DivergentIntegral&) {
            return numerics::inf;
        }
    };
    std::vector<bool> pins = volume::degenerate_duals(cs);
    pins.insert(pins.end(), pins.begin(), pins.end());  // both halves of the pair
    volume::DualSolve s =
        volume::minimize_dual_objective(objective, init, std::max(opts.opt_tol, 1e-9), pins);
    if (!std::isfinite(s.value)) throw Infeasible("no admissible dual for the pair bound");

    const double kl = 0.5 * (sigma2 / s2 - std::log(sigma2 / s2) - 1.0);
    const double mismatch = (1.0 - alpha) * (1.0 - alpha) * ex2 / (2.0 * s2);

    DirectBoundReport r;
    r.v_used = vr.v;
    r.value = 2.0 * vr.v + 0.5 * std::log(2.0 * numerics::pi * (sigma2 + s2)) -
              0.5 * std::log(numerics::two_pi_e * sigma2) - s.value - kl - mismatch;
    r.theta_star_volume = vr.theta_star;
    r.volume_active = vr.active;
    r.theta_star_bound.values = s.theta;
    r.theta_star_bound.sign_domain = init.sign_domain;
    r.bound_active = s.active;
    r.diagnostics.dual_inf = s.value;
    r.diagnostics.objective_evals = s.evals;
    return r;
}

}  // namespace capbound::direct_mi
