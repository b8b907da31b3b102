#include "capbound/volume.hpp"

#include <algorithm>
#include <cmath>

namespace capbound::volume {

using constraints::CostKind;
using constraints::FinitePointSet;
using constraints::Mode;
using numerics::Interval;
using numerics::QuadratureSpec;
using numerics::SignDomain;

namespace {

bool window_one(const ConstraintSet& cs) {
    for (std::size_t i = 0; i < cs.dual_size(); ++i)
        if (cs.dual_term(i).window != 1) return false;
    return true;
}

// -theta . phi(x) over the memoryless dual terms.
double letter_log_weight(const ConstraintSet& cs, std::span<const double> theta, double x) {
    double g = 0;
    const double w[1] = {x};
    for (std::size_t i = 0; i < cs.dual_size(); ++i)
        g -= theta[i] * constraints::evaluate_cost(cs.dual_term(i), w);
    return g;
}

void check_integrable(const ConstraintSet& cs, std::span<const double> theta) {
    const auto* iv = std::get_if<Interval>(&cs.support());
    if (!iv || iv->finite()) return;
    for (std::size_t i = 0; i < cs.dual_size(); ++i) {
        const auto& g = cs.dual_term(i).growth;
        if (theta[i] > 0 && g.coeff > 0 && g.degree >= 1) return;
    }
    throw DivergentIntegral(
        "partition function diverges on an unbounded support: no decaying cost term is active");
}

double logsumexp(std::span<const double> v) {
    double m = -numerics::inf;
    for (double x : v) m = std::max(m, x);
    if (m == -numerics::inf) return m;
    double s = 0;
    for (double x : v) s += std::exp(x - m);
    return m + std::log(s);
}

double psi_values(const ConstraintSet& cs, std::span<const double> theta,
                  const QuadratureSpec& spec) {
    if (!window_one(cs))
        throw UnsupportedKernel("psi over single letters needs memoryless dual terms");
    if (const auto* pts = std::get_if<FinitePointSet>(&cs.support())) {
        std::vector<double> lw(pts->points.size());
        for (std::size_t i = 0; i < lw.size(); ++i)
            lw[i] = letter_log_weight(cs, theta, pts->points[i]);
        return logsumexp(lw);
    }
    check_integrable(cs, theta);
    const Interval iv = std::get<Interval>(cs.support());
    const double hint[1] = {iv.finite() ? std::clamp(0.0, iv.lo, iv.hi) : 0.0};
    return numerics::log_int_exp([&](double x) { return letter_log_weight(cs, theta, x); }, iv,
                                 spec, hint);
}

std::vector<double> moments_values(const ConstraintSet& cs, std::span<const double> theta,
                                   const QuadratureSpec& spec, double psi_val) {
    std::vector<double> out(cs.dual_size(), 0.0);
    if (const auto* pts = std::get_if<FinitePointSet>(&cs.support())) {
        for (double x : pts->points) {
            const double mass = std::exp(letter_log_weight(cs, theta, x) - psi_val);
            const double w[1] = {x};
            for (std::size_t j = 0; j < out.size(); ++j)
                out[j] += mass * constraints::evaluate_cost(cs.dual_term(j), w);
        }
        return out;
    }
    const Interval iv = std::get<Interval>(cs.support());
    for (std::size_t j = 0; j < out.size(); ++j) {
        auto f = [&](double x) {
            const double w[1] = {x};
            return constraints::evaluate_cost(cs.dual_term(j), w) *
                   std::exp(letter_log_weight(cs, theta, x) - psi_val);
        };
        out[j] = numerics::integrate(f, iv, spec).value;
    }
    return out;
}

}  // namespace

DualVector default_dual(const ConstraintSet& cs) {
    DualVector d;
    d.values.reserve(cs.dual_size());
    d.sign_domain.reserve(cs.dual_size());
    for (std::size_t i = 0; i < cs.dual_size(); ++i) {
        const CostTerm& t = cs.dual_term(i);
        if (t.mode == Mode::equality) {
            d.values.push_back(0.0);
            d.sign_domain.push_back(SignDomain::free_sign);
        } else {
            d.values.push_back(1.0 / (2.0 * std::max(t.limit, 1e-6)));
            d.sign_domain.push_back(SignDomain::positive);
        }
    }
    return d;
}

double psi(const ConstraintSet& cs, const DualVector& theta, const QuadratureSpec& spec) {
    if (theta.size() != cs.dual_size()) throw Error("dual vector length mismatch");
    return psi_values(cs, theta.values, spec);
}

std::vector<double> tilted_moments(const ConstraintSet& cs, const DualVector& theta,
                                   const QuadratureSpec& spec) {
    if (theta.size() != cs.dual_size()) throw Error("dual vector length mismatch");
    const double p = psi_values(cs, theta.values, spec);
    return moments_values(cs, theta.values, spec, p);
}

TiltedDensity::TiltedDensity(const ConstraintSet& cs, DualVector theta, const QuadratureSpec& spec)
    : support_(cs.support()), theta_(std::move(theta)) {
    if (theta_.size() != cs.dual_size()) throw Error("dual vector length mismatch");
    dual_terms_.reserve(cs.dual_size());
    for (std::size_t i = 0; i < cs.dual_size(); ++i) dual_terms_.push_back(cs.dual_term(i));
    log_normalizer_ = psi_values(cs, theta_.values, spec);
    moments_ = moments_values(cs, theta_.values, spec, log_normalizer_);
    if (const auto* pts = std::get_if<FinitePointSet>(&support_)) {
        masses_.resize(pts->points.size());
        for (std::size_t i = 0; i < masses_.size(); ++i)
            masses_[i] = std::exp(letter_log_weight(cs, theta_.values, pts->points[i]) -
                                  log_normalizer_);
    }
    power_tilt_ = std::holds_alternative<Interval>(support_);
    power_theta_ = 0;
    for (std::size_t i = 0; i < dual_terms_.size(); ++i) {
        if (dual_terms_[i].kind == CostKind::power)
            power_theta_ += theta_.values[i];
        else if (std::abs(theta_.values[i]) > 0)
            power_tilt_ = false;
    }
}

double TiltedDensity::log_density(double x) const {
    const auto* iv = std::get_if<Interval>(&support_);
    if (!iv) throw Error("log_density needs an interval support");
    if (!iv->contains(x)) return -numerics::inf;
    double g = 0;
    const double w[1] = {x};
    for (std::size_t i = 0; i < dual_terms_.size(); ++i)
        g -= theta_.values[i] * constraints::evaluate_cost(dual_terms_[i], w);
    return g - log_normalizer_;
}

double TiltedDensity::second_moment(const QuadratureSpec& spec) const {
    for (std::size_t i = 0; i < dual_terms_.size(); ++i)
        if (dual_terms_[i].kind == CostKind::power) return moments_[i];
    if (const auto* pts = std::get_if<FinitePointSet>(&support_)) {
        double s = 0;
        for (std::size_t i = 0; i < masses_.size(); ++i)
            s += masses_[i] * pts->points[i] * pts->points[i];
        return s;
    }
    const Interval iv = std::get<Interval>(support_);
    return numerics::integrate([&](double x) { return x * x * std::exp(log_density(x)); }, iv,
                               spec)
        .value;
}

std::vector<bool> degenerate_duals(const ConstraintSet& cs) {
    std::vector<bool> out(cs.dual_size(), false);
    const auto* pts = std::get_if<FinitePointSet>(&cs.support());
    if (!pts) return out;
    for (std::size_t i = 0; i < cs.dual_size(); ++i) {
        if (cs.dual_term(i).window != 1) continue;
        double lo = numerics::inf, hi = -numerics::inf;
        for (double x : pts->points) {
            const double w[1] = {x};
            const double c = constraints::evaluate_cost(cs.dual_term(i), w);
            lo = std::min(lo, c);
            hi = std::max(hi, c);
        }
        out[i] = (hi - lo) <= 1e-12 * (1.0 + std::abs(hi));
    }
    return out;
}

DualSolve minimize_dual_objective(const std::function<double(std::span<const double>)>& objective,
                                  const DualVector& init, double tol,
                                  const std::vector<bool>& pin_zero) {
    const std::size_t k = init.size();
    std::vector<bool> in_play(k, true);
    for (std::size_t i = 0; i < k && i < pin_zero.size(); ++i)
        if (pin_zero[i]) in_play[i] = false;
    DualSolve out;
    out.theta.assign(k, 0.0);
    out.active.assign(k, true);

    for (std::size_t round = 0; round <= k; ++round) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < k; ++i)
            if (in_play[i]) idx.push_back(i);

        double value;
        std::vector<double> theta(k, 0.0);
        std::size_t evals = 0;
        bool converged = true;
        if (idx.empty()) {
            value = objective(theta);
            evals = 1;
        } else {
            std::vector<SignDomain> dom(idx.size());
            std::vector<double> start(idx.size());
            for (std::size_t j = 0; j < idx.size(); ++j) {
                dom[j] = init.sign_domain[idx[j]];
                start[j] = init.values[idx[j]];
                if (dom[j] == SignDomain::positive && start[j] <= 0) start[j] = 1e-3;
            }
            auto reduced = [&](std::span<const double> t) {
                std::vector<double> full(k, 0.0);
                for (std::size_t j = 0; j < idx.size(); ++j) full[idx[j]] = t[j];
                return objective(full);
            };
            numerics::ConvexMinimum m = numerics::minimize_convex(
                reduced, static_cast<int>(idx.size()), dom, start, tol);
            for (std::size_t j = 0; j < idx.size(); ++j) theta[idx[j]] = m.argmin[j];
            value = m.value;
            evals = m.evals;
            converged = m.converged;
        }

        out.theta = theta;
        out.value = value;
        out.evals += evals;
        out.converged = converged;

        bool changed = false;
        for (std::size_t i = 0; i < k; ++i) {
            const bool below = std::abs(theta[i]) < numerics::inactive_threshold;
            if (in_play[i] && below) {
                in_play[i] = false;
                changed = true;
            }
        }
        for (std::size_t i = 0; i < k; ++i) out.active[i] = in_play[i];
        if (!changed) break;
    }
    return out;
}

VolumeReport volume_exponent(const ConstraintSet& cs, const VolumeOptions& opts) {
    // A single filtered-peak constraint: the input body is the inverse image
    // of a hypercube under the filtering map, so the exponent is the cube's
    // exponent minus the per-dimension log Jacobian.
    bool any_filtered = false;
    for (const CostTerm& t : cs.terms()) any_filtered |= (t.kind == CostKind::filtered_peak);
    if (any_filtered) {
        if (cs.terms().size() != 1)
            throw UnsupportedKernel(
                "filtered peak constraints are only supported in isolation");
        const CostTerm& t = cs.terms()[0];
        VolumeReport r;
        r.v = std::log(2.0 * t.amplitude) - filter_jacobian_log(t.taps);
        r.theta_star.values = {0.0};
        r.theta_star.sign_domain = {SignDomain::positive};
        r.active = {true};
        r.method = Method::jacobian;
        return r;
    }

    const DualVector init = default_dual(cs);

    if (cs.dual_size() == 0) {
        // Pure peak wells: the body is the support box itself.
        VolumeReport r;
        if (!cs.has_finite_support())
            throw Unbounded("support is unbounded and no cost term constrains it");
        if (const auto* pts = std::get_if<FinitePointSet>(&cs.support()))
            r.v = std::log(static_cast<double>(pts->points.size()));
        else
            r.v = std::log(cs.support_interval().length());
        r.method = Method::dual;
        return r;
    }

    if (window_one(cs)) {
        auto objective = [&](std::span<const double> t) {
            double val = 0;
            for (std::size_t i = 0; i < cs.dual_size(); ++i)
                val += t[i] * cs.dual_term(i).limit;
            try {
                return val + psi_values(cs, t, opts.quad);
            } catch (const DivergentIntegral&) {
                return numerics::inf;
            }
        };
        const std::vector<bool> pins = degenerate_duals(cs);
        DualSolve s = minimize_dual_objective(objective, init, opts.opt_tol, pins);
        if (!std::isfinite(s.value))
            throw Infeasible("no dual point with a finite partition function was found");

        VolumeReport r;
        r.v = s.value;
        r.theta_star.values = s.theta;
        r.theta_star.sign_domain = init.sign_domain;
        r.active = s.active;
        r.method = Method::dual;
        r.diagnostics.objective_evals = s.evals;
        r.diagnostics.optimizer_converged = s.converged;
        // Active coordinates must match their moments at the optimum.
        const double p = psi_values(cs, s.theta, opts.quad);
        const std::vector<double> mom = moments_values(cs, s.theta, opts.quad, p);
        double res = 0;
        for (std::size_t i = 0; i < cs.dual_size(); ++i)
            if (s.active[i])
                res = std::max(res, std::abs(mom[i] - cs.dual_term(i).limit) /
                                        (1.0 + std::abs(cs.dual_term(i).limit)));
        r.diagnostics.moment_residual = res;
        return r;
    }

    // Sliding-window route: dual minimization over the Nystrom psi.
    if (cs.max_window() > 3)
        throw UnsupportedKernel("sliding-window constraints are limited to window <= 3");
    if (!cs.has_finite_support() || !std::holds_alternative<Interval>(cs.support()))
        throw UnsupportedKernel(
            "sliding-window volume exponent needs a finite interval support (add a peak well)");

    // The optimizer runs on a coarser grid; psi is spectrally convergent for
    // the analytic kernels handled here, and the optimum is re-evaluated on
    // the full grid afterwards.
    const int opt_grid = std::max(100, opts.nystrom_n / 4);
    auto objective = [&](std::span<const double> t) {
        double val = 0;
        DualVector dv;
        dv.values.assign(t.begin(), t.end());
        dv.sign_domain = init.sign_domain;
        for (std::size_t i = 0; i < cs.dual_size(); ++i) val += t[i] * cs.dual_term(i).limit;
        KernelSpec k = KernelSpec::from(cs, dv);
        try {
            NystromSolution sol = kernel_psi_nystrom_full(k, opt_grid, numerics::inf);
            return val + sol.psi;
        } catch (const NoConvergence&) {
            return numerics::inf;
        }
    };
    DualSolve s = minimize_dual_objective(objective, init, std::max(opts.opt_tol, 1e-10));
    if (!std::isfinite(s.value))
        throw Infeasible("no dual point with a finite spectral radius was found");

    VolumeReport r;
    r.v = s.value;
    r.theta_star.values = s.theta;
    r.theta_star.sign_domain = init.sign_domain;
    r.active = s.active;
    r.method = Method::nystrom;
    r.diagnostics.objective_evals = s.evals;
    r.diagnostics.optimizer_converged = s.converged;
    {
        DualVector dv{s.theta, init.sign_domain};
        KernelSpec k = KernelSpec::from(cs, dv);
        NystromSolution fin = kernel_psi_nystrom_full(k, opts.nystrom_n, 1e-6);
        double val = 0;
        for (std::size_t i = 0; i < cs.dual_size(); ++i) val += s.theta[i] * cs.dual_term(i).limit;
        r.v = val + fin.psi;
        r.diagnostics.nystrom_n = fin.n;
        r.diagnostics.moment_residual = std::numeric_limits<double>::quiet_NaN();
    }
    return r;
}

double KernelSpec::log_kernel(std::span<const double> w) const {
    if (static_cast<int>(w.size()) != window) throw WindowMismatch("kernel window mismatch");
    double g = 0;
    for (std::size_t j = 0; j < terms.size(); ++j) {
        const CostTerm& t = terms[j];
        const int placements = window - t.window + 1;
        double val = 0;
        for (int p = 0; p < placements; ++p)
            val += constraints::evaluate_cost(t, w.subspan(p, t.window));
        g -= theta.values[j] * val / placements;
    }
    return g;
}

KernelSpec KernelSpec::from(const ConstraintSet& cs, const DualVector& theta) {
    if (theta.size() != cs.dual_size()) throw Error("dual vector length mismatch");
    KernelSpec k;
    k.window = std::max(cs.max_window(), 2);
    k.theta = theta;
    bool symmetric = true;
    for (std::size_t i = 0; i < cs.dual_size(); ++i) {
        const CostTerm& t = cs.dual_term(i);
        if (t.kind == CostKind::filtered_peak || t.kind == CostKind::custom) symmetric = false;
        k.terms.push_back(t);
    }
    if (!std::holds_alternative<Interval>(cs.support()) || !cs.has_finite_support())
        throw UnsupportedKernel("kernel operations need a finite interval support");
    k.support = cs.support_interval();
    k.symmetric = symmetric;
    return k;
}

namespace {

// log of the iterated integral  int int exp{logf(x, y)} dy dx; the inner pass
// runs at a 10x tighter tolerance so errors compose under control.
double log_double_int(const std::function<double(double, double)>& logf, Interval ix, Interval iy,
                      const QuadratureSpec& spec) {
    QuadratureSpec inner = spec;
    inner.rel_tol *= 0.1;
    inner.abs_tol *= 0.1;
    auto outer = [&](double x) {
        return numerics::log_int_exp([&, x](double y) { return logf(x, y); }, iy, inner);
    };
    return numerics::log_int_exp(outer, ix, spec);
}

}  // namespace

RayleighFamily RayleighFamily::exponential(std::vector<double> alphas) {
    RayleighFamily f;
    f.kind = Kind::exponential;
    f.alphas = std::move(alphas);
    if (std::find(f.alphas.begin(), f.alphas.end(), 0.0) == f.alphas.end())
        f.alphas.push_back(0.0);
    return f;
}

double kernel_psi_rayleigh(const KernelSpec& k, const RayleighFamily& family,
                           const QuadratureSpec& spec) {
    if (k.window != 2 || !k.symmetric)
        throw UnsupportedKernel("Rayleigh quotient bound needs a symmetric window-2 kernel");
    if (!k.support.finite()) throw UnsupportedKernel("Rayleigh bound needs a finite support");

    auto quotient = [&](double alpha) {
        // u_alpha(x) proportional to exp(-alpha x); alpha = 0 is the constant
        // test function.
        auto logf = [&](double x, double y) {
            const double w[2] = {x, y};
            return k.log_kernel(w) - alpha * (x + y);
        };
        const double num = log_double_int(logf, k.support, k.support, spec);
        const double den =
            numerics::log_int_exp([&](double x) { return -2.0 * alpha * x; }, k.support, spec);
        return num - den;
    };

    if (family.kind == RayleighFamily::Kind::constant) return quotient(0.0);
    double best = -numerics::inf;
    for (double a : family.alphas) best = std::max(best, quotient(a));
    return best;
}

namespace {

struct PowerIterResult {
    double eigenvalue = 0;  // of the shifted kernel
    std::vector<double> vec;
};

// Dominant eigenvalue of a positive matrix given through its action y = M v.
PowerIterResult power_iterate(const std::function<void(const std::vector<double>&,
                                                       std::vector<double>&)>& apply,
                              std::size_t dim) {
    std::vector<double> v(dim, 1.0 / std::sqrt(static_cast<double>(dim)));
    std::vector<double> y(dim);
    double lambda = 0;
    int settled = 0;
    for (long iter = 0; iter < 100000; ++iter) {
        apply(v, y);
        double vy = 0, vv = 0, norm = 0;
        for (std::size_t i = 0; i < dim; ++i) {
            vy += v[i] * y[i];
            vv += v[i] * v[i];
            norm += y[i] * y[i];
        }
        norm = std::sqrt(norm);
        if (!(norm > 0) || !std::isfinite(norm))
            throw NoConvergence("power iteration produced a degenerate vector");
        const double lambda_new = vy / vv;
        for (std::size_t i = 0; i < dim; ++i) v[i] = y[i] / norm;
        if (std::abs(lambda_new - lambda) <= 1e-14 * std::max(1.0, std::abs(lambda_new))) {
            if (++settled >= 3) return {lambda_new, std::move(v)};
        } else {
            settled = 0;
        }
        lambda = lambda_new;
    }
    throw NoConvergence("power iteration stalled after 100000 sweeps");
}

NystromSolution nystrom_once(const KernelSpec& k, int n) {
    NystromSolution sol;
    sol.n = n;
    numerics::gauss_legendre(n, k.support, sol.nodes, sol.weights);

    if (k.window == 2) {
        // Shift the kernel so the matrix stays in range.
        std::vector<double> logK(static_cast<std::size_t>(n) * n);
        double shift = -numerics::inf;
        for (int i = 0; i < n; ++i)
            for (int j = 0; j < n; ++j) {
                const double w[2] = {sol.nodes[i], sol.nodes[j]};
                const double v = k.log_kernel(w);
                logK[static_cast<std::size_t>(i) * n + j] = v;
                shift = std::max(shift, v);
            }
        std::vector<double> M(static_cast<std::size_t>(n) * n);
        if (k.symmetric) {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    M[static_cast<std::size_t>(i) * n + j] =
                        std::sqrt(sol.weights[i] * sol.weights[j]) *
                        std::exp(logK[static_cast<std::size_t>(i) * n + j] - shift);
        } else {
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < n; ++j)
                    M[static_cast<std::size_t>(i) * n + j] =
                        sol.weights[j] *
                        std::exp(logK[static_cast<std::size_t>(i) * n + j] - shift);
        }
        auto apply = [&](const std::vector<double>& v, std::vector<double>& y) {
            for (int i = 0; i < n; ++i) {
                double s = 0;
                const double* row = &M[static_cast<std::size_t>(i) * n];
                for (int j = 0; j < n; ++j) s += row[j] * v[j];
                y[i] = s;
            }
        };
        PowerIterResult pr = power_iterate(apply, n);
        sol.eigenvalue = pr.eigenvalue * std::exp(shift);
        sol.psi = std::log(pr.eigenvalue) + shift;
        sol.eigvec.resize(n);
        double vmax = 0;
        for (int i = 0; i < n; ++i) {
            sol.eigvec[i] = k.symmetric ? pr.vec[i] / std::sqrt(sol.weights[i]) : pr.vec[i];
            vmax = std::max(vmax, std::abs(sol.eigvec[i]));
        }
        double sign = 0;
        for (double v : sol.eigvec) sign += v;
        for (double& v : sol.eigvec) v = (sign < 0 ? -v : v) / vmax;
        return sol;
    }

    // window == 3: aggregate the two-letter state on a product grid.
    const int ns = n;
    std::vector<double> logS(static_cast<std::size_t>(ns) * ns * ns);
    double shift = -numerics::inf;
    for (int a = 0; a < ns; ++a)
        for (int b = 0; b < ns; ++b)
            for (int c = 0; c < ns; ++c) {
                const double w[3] = {sol.nodes[a], sol.nodes[b], sol.nodes[c]};
                const double v = k.log_kernel(w);
                logS[(static_cast<std::size_t>(a) * ns + b) * ns + c] = v;
                shift = std::max(shift, v);
            }
    for (double& v : logS) v = std::exp(v - shift);
    auto apply = [&](const std::vector<double>& v, std::vector<double>& y) {
        // new state (b, c) gathers old state (a, b) against K(a, b, c).
        for (int b = 0; b < ns; ++b)
            for (int c = 0; c < ns; ++c) {
                double s = 0;
                for (int a = 0; a < ns; ++a)
                    s += sol.weights[a] * logS[(static_cast<std::size_t>(a) * ns + b) * ns + c] *
                         v[static_cast<std::size_t>(a) * ns + b];
                y[static_cast<std::size_t>(b) * ns + c] = s;
            }
    };
    PowerIterResult pr = power_iterate(apply, static_cast<std::size_t>(ns) * ns);
    sol.eigenvalue = pr.eigenvalue * std::exp(shift);
    sol.psi = std::log(pr.eigenvalue) + shift;
    sol.eigvec = std::move(pr.vec);
    return sol;
}

}  // namespace

NystromSolution kernel_psi_nystrom_full(const KernelSpec& k, int grid_n, double refine_tol) {
    if (k.window < 2 || k.window > 3)
        throw UnsupportedKernel("Nystrom discretization supports windows 2 and 3");
    if (!k.support.finite()) throw UnsupportedKernel("Nystrom needs a finite support");
    int n = k.window == 3 ? std::min(grid_n, 64) : grid_n;
    const int n_cap = k.window == 3 ? 250 : 6400;
    n = std::max(n, 2);
    NystromSolution sol = nystrom_once(k, n);
    if (!std::isfinite(refine_tol)) return sol;
    while (2 * n <= n_cap) {
        NystromSolution next = nystrom_once(k, 2 * n);
        const double delta = std::abs(next.psi - sol.psi);
        sol = std::move(next);
        n *= 2;
        if (delta <= refine_tol) return sol;
    }
    return sol;
}

double kernel_psi_nystrom(const KernelSpec& k, int grid_n) {
    return kernel_psi_nystrom_full(k, grid_n, 1e-6).psi;
}

CwBracket kernel_psi_collatz(const KernelSpec& k, const numerics::Fn& g,
                             const QuadratureSpec& spec) {
    if (k.window != 2)
        throw UnsupportedKernel("Collatz-Wielandt bracket is implemented for window-2 kernels");
    if (!k.support.finite()) throw UnsupportedKernel("Collatz-Wielandt needs a finite support");

    auto log_g = [&](double x) {
        const double v = g(x);
        if (!(v > 0)) throw NonPositiveTestFunction("test function must be strictly positive");
        return std::log(v);
    };
    auto log_ratio = [&](double x) {
        auto integrand = [&](double y) {
            const double w[2] = {x, y};
            return k.log_kernel(w) + log_g(y);
        };
        return numerics::log_int_exp(integrand, k.support, spec) - log_g(x);
    };

    // Coarse grid, then local golden refinement around the extrema.
    const int np = 201;
    double lo_x = k.support.lo, hi_x = k.support.lo;
    double lo_v = numerics::inf, hi_v = -numerics::inf;
    const double step = k.support.length() / (np - 1.0);
    for (int i = 0; i < np; ++i) {
        const double x = k.support.lo + step * i;
        const double r = log_ratio(x);
        if (r < lo_v) { lo_v = r; lo_x = x; }
        if (r > hi_v) { hi_v = r; hi_x = x; }
    }
    auto refine = [&](double x0, double sign) {
        double a = std::max(k.support.lo, x0 - step);
        double b = std::min(k.support.hi, x0 + step);
        numerics::ScalarMinimum m = numerics::minimize_scalar(
            [&](double x) { return sign * log_ratio(x); }, {a, b}, 1e-10);
        return sign * m.value;
    };
    lo_v = std::min(lo_v, refine(lo_x, +1.0));
    hi_v = std::max(hi_v, refine(hi_x, -1.0));
    return {lo_v, hi_v};
}

double donsker_varadhan_psi(const KernelSpec& k, int grid_n) {
    if (k.window != 2)
        throw UnsupportedKernel("Donsker-Varadhan bound is implemented for window-2 kernels");
    if (!k.support.finite()) throw UnsupportedKernel("Donsker-Varadhan needs a finite support");
    const int n = std::max(grid_n, 2);
    std::vector<double> nodes, weights;
    numerics::gauss_legendre(n, k.support, nodes, weights);

    // S(x) = log int K(x, x') dx' on the grid; transition T_ij = w_j K_ij / e^{S_i}.
    std::vector<double> logK(static_cast<std::size_t>(n) * n);
    for (int i = 0; i < n; ++i)
        for (int j = 0; j < n; ++j) {
            const double w[2] = {nodes[i], nodes[j]};
            logK[static_cast<std::size_t>(i) * n + j] = k.log_kernel(w);
        }
    std::vector<double> S(n);
    for (int i = 0; i < n; ++i) {
        double m = -numerics::inf;
        for (int j = 0; j < n; ++j)
            m = std::max(m, logK[static_cast<std::size_t>(i) * n + j]);
        double s = 0;
        for (int j = 0; j < n; ++j)
            s += weights[j] * std::exp(logK[static_cast<std::size_t>(i) * n + j] - m);
        S[i] = m + std::log(s);
    }

    std::vector<double> pi(n, 1.0 / n), next(n);
    for (long iter = 0; iter < 100000; ++iter) {
        for (int j = 0; j < n; ++j) next[j] = 0;
        for (int i = 0; i < n; ++i) {
            const double base = pi[i] * std::exp(-S[i]);
            for (int j = 0; j < n; ++j)
                next[j] += base * weights[j] *
                           std::exp(logK[static_cast<std::size_t>(i) * n + j]);
        }
        double total = 0;
        for (int j = 0; j < n; ++j) total += next[j];
        if (!(total > 0)) throw NoConvergence("stationary distribution iteration degenerated");
        double delta = 0;
        for (int j = 0; j < n; ++j) {
            next[j] /= total;
            delta += std::abs(next[j] - pi[j]);
        }
        pi.swap(next);
        if (delta <= 1e-15) {
            double out = 0;
            for (int j = 0; j < n; ++j) out += pi[j] * S[j];
            return out;
        }
    }
    throw NoConvergence("stationary distribution did not converge in 100000 sweeps");
}

double filter_jacobian_log(std::span<const double> taps) {
    if (taps.empty() || taps.front() == 0.0)
        throw ZeroLeadingTap("causal filter needs a nonzero leading tap");
    return std::log(std::abs(taps.front()));
}

double filter_jacobian_log_freq(std::span<const double> taps, const QuadratureSpec& spec) {
    if (taps.empty() || taps.front() == 0.0)
        throw ZeroLeadingTap("causal filter needs a nonzero leading tap");
    auto integrand = [&](double w) {
        double re = 0, im = 0;
        for (std::size_t i = 0; i < taps.size(); ++i) {
            re += taps[i] * std::cos(w * static_cast<double>(i));
            im -= taps[i] * std::sin(w * static_cast<double>(i));
        }
        return 0.5 * std::log(re * re + im * im);
    };
    const auto r = numerics::integrate(integrand, {-numerics::pi, numerics::pi}, spec);
    return r.value / (2.0 * numerics::pi);
}

}  // namespace capbound::volume
