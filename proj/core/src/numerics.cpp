#include "capbound/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <set>

namespace capbound::numerics {

namespace {

// Kronrod-15 abscissae with embedded Gauss-7 (QUADPACK constants).
constexpr double k15_x[8] = {
    0.000000000000000000000000000000000,
    0.207784955007898467600689403773245,
    0.405845151377397166906606412076961,
    0.586087235467691130294144838258730,
    0.741531185599394439863864773280788,
    0.864864423359769072789712788640926,
    0.949107912342758524526189684047851,
    0.991455371120812639206854697526329,
};
constexpr double k15_w[8] = {
    0.209482141084727828012999174891714,
    0.204432940075298892414161999234649,
    0.190350578064785409913256402421014,
    0.169004726639267902826583426598550,
    0.140653259715525918745189590510238,
    0.104790010322250183839876322541518,
    0.063092092629978553290700663189204,
    0.022935322010529224963732008058970,
};
// Gauss-7 weights, aligned with k15_x indices 0, 2, 4, 6.
constexpr double g7_w[4] = {
    0.417959183673469387755102040816327,
    0.381830050505118944950369775488975,
    0.279705391489276667901467771423780,
    0.129484966168869693270611432679082,
};

struct MappedDomain {
    // x(t) and the Jacobian dx/dt over a bounded open parameter range (a, b).
    double a, b;
    bool identity;
    double lo, hi;  // original endpoints

    double x(double t) const {
        if (identity) return t;
        if (std::isinf(lo) && std::isinf(hi)) return t / (1.0 - t * t);
        if (std::isinf(hi)) return lo + t / (1.0 - t);
        return hi - t / (1.0 - t);
    }
    double jac(double t) const {
        if (identity) return 1.0;
        if (std::isinf(lo) && std::isinf(hi)) {
            const double d = 1.0 - t * t;
            return (1.0 + t * t) / (d * d);
        }
        const double d = 1.0 - t;
        return 1.0 / (d * d);
    }
    double t_of_x(double x) const {
        if (identity) return x;
        if (std::isinf(lo) && std::isinf(hi)) {
            if (x == 0.0) return 0.0;
            return (-1.0 + std::sqrt(1.0 + 4.0 * x * x)) / (2.0 * x);
        }
        if (std::isinf(hi)) return (x - lo) / (1.0 + (x - lo));
        return (hi - x) / (1.0 + (hi - x));
    }
};

MappedDomain map_domain(Interval iv) {
    if (iv.finite()) return {iv.lo, iv.hi, true, iv.lo, iv.hi};
    if (std::isinf(iv.lo) && std::isinf(iv.hi)) return {-1.0, 1.0, false, iv.lo, iv.hi};
    return {0.0, 1.0, false, iv.lo, iv.hi};  // half line, either side
}

struct Segment {
    double a, b;
    double integral;
    double error;
};

struct GkEval {
    double integral;
    double error;
};

template <typename F>
GkEval gk15(const F& f, double a, double b) {
    const double c = 0.5 * (a + b);
    const double h = 0.5 * (b - a);
    double fv[15];
    fv[0] = f(c);
    for (int i = 1; i < 8; ++i) {
        const double dx = h * k15_x[i];
        fv[2 * i - 1] = f(c - dx);
        fv[2 * i] = f(c + dx);
    }
    double kres = k15_w[0] * fv[0];
    for (int i = 1; i < 8; ++i) kres += k15_w[i] * (fv[2 * i - 1] + fv[2 * i]);
    double gres = g7_w[0] * fv[0];
    for (int i = 1; i < 4; ++i) gres += g7_w[i] * (fv[4 * i - 1] + fv[4 * i]);
    kres *= h;
    gres *= h;
    return {kres, std::abs(kres - gres)};
}

// Comparator for the refinement queue: split the segment with the largest
// error estimate first.
struct SegCmp {
    bool operator()(const Segment& l, const Segment& r) const {
        if (l.error != r.error) return l.error > r.error;
        return l.a < r.a;
    }
};

template <typename F>
QuadratureResult adaptive_edges(const F& f, const std::vector<double>& edges,
                                const QuadratureSpec& spec) {
    std::multiset<Segment, SegCmp> segs;
    std::size_t evals = 0;
    for (std::size_t i = 0; i + 1 < edges.size(); ++i) {
        const GkEval e = gk15(f, edges[i], edges[i + 1]);
        evals += 15;
        segs.insert({edges[i], edges[i + 1], e.integral, e.error});
    }
    int splits = static_cast<int>(edges.size()) - 1;
    for (;;) {
        double total = 0, err = 0;
        for (const Segment& s : segs) {
            total += s.integral;
            err += s.error;
        }
        if (!std::isfinite(total)) throw DivergentIntegral("integrand is not finite");
        if (err <= std::max(spec.abs_tol, spec.rel_tol * std::abs(total)))
            return {total, err, evals};
        if (splits >= spec.max_subdivisions)
            throw DivergentIntegral("adaptive quadrature did not converge within " +
                                    std::to_string(spec.max_subdivisions) + " subdivisions");
        const Segment worst = *segs.begin();
        segs.erase(segs.begin());
        const double mid = 0.5 * (worst.a + worst.b);
        if (mid <= worst.a || mid >= worst.b) {
            // Interval narrowed to machine precision; accept its estimate as is.
            segs.insert({worst.a, worst.b, worst.integral, 0.0});
            continue;
        }
        const GkEval l = gk15(f, worst.a, mid);
        const GkEval r = gk15(f, mid, worst.b);
        evals += 30;
        ++splits;
        segs.insert({worst.a, mid, l.integral, l.error});
        segs.insert({mid, worst.b, r.integral, r.error});
    }
}

template <typename F>
QuadratureResult adaptive(const F& f, double a, double b, const QuadratureSpec& spec,
                          int initial_splits) {
    const int n0 = std::max(1, initial_splits);
    std::vector<double> edges(n0 + 1);
    for (int i = 0; i <= n0; ++i) edges[i] = a + (b - a) * i / n0;
    return adaptive_edges(f, edges, spec);
}

// Initial edges that trap a possibly narrow peak at t0: a uniform grid plus a
// geometric cascade closing in on t0 from both sides.
std::vector<double> peak_trap_edges(double a, double b, double t0, int uniform_splits) {
    std::vector<double> edges;
    const int n0 = std::max(1, uniform_splits);
    for (int i = 0; i <= n0; ++i) edges.push_back(a + (b - a) * i / n0);
    double w = (b - a) * 0.25;
    for (int k = 0; k < 46; ++k) {
        if (t0 - w > a) edges.push_back(t0 - w);
        if (t0 + w < b) edges.push_back(t0 + w);
        w *= 0.5;
    }
    edges.push_back(std::clamp(t0, a, b));
    std::sort(edges.begin(), edges.end());
    edges.erase(std::unique(edges.begin(), edges.end()), edges.end());
    return edges;
}

}  // namespace

double q_function(double u) {
    if (std::isnan(u)) return u;
    if (u == inf) return 0.0;
    if (u == -inf) return 1.0;
    return 0.5 * std::erfc(u * 0.7071067811865475244);
}

double normal_interval_mass(double l, double u) {
    if (!(l <= u)) return 0.0;
    constexpr double inv_sqrt2 = 0.7071067811865475244;
    if (l <= 0.0 && u >= 0.0)
        return 0.5 * (std::erf(u * inv_sqrt2) + std::erf(-l * inv_sqrt2));
    if (l > 0.0) return q_function(l) - q_function(u);
    return q_function(-u) - q_function(-l);
}

double shi(double z) {
    if (std::isnan(z) || z < 0) throw NonFinite("shi requires z >= 0");
    if (z == 0) return 0.0;
    if (z > 700.0) return std::exp(log_shi(z));  // overflows to +inf past ~709
    if (z <= 30.0) {
        // Shi(z) = sum z^(2k+1) / ((2k+1) (2k+1)!) -- all terms positive.
        double a = z;  // z^(2k+1)/(2k+1)!
        double sum = z;
        for (int k = 1; k < 200; ++k) {
            a *= z * z / (2.0 * k * (2.0 * k + 1.0));
            const double term = a / (2.0 * k + 1.0);
            sum += term;
            if (term < 1e-17 * sum) break;
        }
        return sum;
    }
    QuadratureSpec spec;
    spec.rel_tol = 1e-13;
    auto r = integrate([](double u) { return u < 1e-8 ? 1.0 : std::sinh(u) / u; },
                       {0.0, z}, spec);
    return r.value;
}

double log_shi(double z) {
    if (std::isnan(z) || z < 0) throw NonFinite("log_shi requires z >= 0");
    if (z == 0) return -inf;
    if (z <= 600.0) return std::log(shi(z));
    // log(sinh u / u) = u - log(2u) + log1p(-exp(-2u)) for u away from 0.
    auto g = [](double u) {
        if (u < 1e-4) return u * u / 6.0;  // log(sinh u / u) series
        return u - std::log(2.0 * u) + std::log1p(-std::exp(-2.0 * u));
    };
    QuadratureSpec spec;
    spec.rel_tol = 1e-12;
    return log_int_exp(g, {0.0, z}, spec);
}

QuadratureResult integrate(const Fn& f, Interval domain, const QuadratureSpec& spec) {
    if (!(domain.lo < domain.hi)) throw NonFinite("integration domain must satisfy lo < hi");
    const MappedDomain md = map_domain(domain);
    if (md.identity) return adaptive(f, md.a, md.b, spec, 8);
    auto g = [&](double t) { return f(md.x(t)) * md.jac(t); };
    // Keep the Gauss-Kronrod nodes off the (open) parameter endpoints.
    const double eps = 1e-15;
    return adaptive(g, md.a + eps, md.b - eps, spec, 16);
}

double log_int_exp(const Fn& g, Interval domain, const QuadratureSpec& spec) {
    return log_int_exp(g, domain, spec, {});
}

double log_int_exp(const Fn& g, Interval domain, const QuadratureSpec& spec,
                   std::span<const double> peak_hints) {
    if (!(domain.lo < domain.hi)) throw NonFinite("integration domain must satisfy lo < hi");
    const MappedDomain md = map_domain(domain);
    const double eps = 1e-15;
    const double ta = md.a + (md.identity ? 0.0 : eps);
    const double tb = md.b - (md.identity ? 0.0 : eps);

    auto h = [&](double t) {
        const double v = g(md.x(t));
        if (std::isnan(v)) throw NonFinite("log_int_exp integrand returned NaN");
        return md.identity ? v : v + std::log(md.jac(t));
    };

    // Tail check on infinite domains: exp{g} must decay, otherwise the
    // integral diverges and no amount of refinement will converge.
    if (!md.identity) {
        double interior = h(0.5 * (ta + tb));
        for (double t : {tb - 1e-9, tb - 1e-12}) {
            if (h(t) > interior + 50.0) throw DivergentIntegral("integrand grows toward +infinity");
        }
        if (std::isinf(md.lo) && std::isinf(md.hi)) {
            for (double t : {ta + 1e-9, ta + 1e-12}) {
                if (h(t) > interior + 50.0)
                    throw DivergentIntegral("integrand grows toward -infinity");
            }
        }
    }

    // Locate the max-shift: coarse grid, caller hints, then a short local
    // golden refinement around the best probe.
    const int np = 129;
    double best_t = ta, best_h = -inf;
    for (int i = 0; i < np; ++i) {
        const double t = ta + (tb - ta) * i / (np - 1.0);
        const double v = h(t);
        if (v > best_h) {
            best_h = v;
            best_t = t;
        }
    }
    for (double hint : peak_hints) {
        const double t = md.t_of_x(hint);  // hints arrive in x-space
        if (!(t >= ta) || !(t <= tb)) continue;
        const double v = h(t);
        if (v > best_h) {
            best_h = v;
            best_t = t;
        }
    }
    {
        const double step = (tb - ta) / (np - 1.0);
        double lo = std::max(ta, best_t - step), hi = std::min(tb, best_t + step);
        for (int it = 0; it < 60 && hi - lo > 1e-13 * (tb - ta); ++it) {
            const double m1 = lo + 0.381966011250105 * (hi - lo);
            const double m2 = hi - 0.381966011250105 * (hi - lo);
            const double h1 = h(m1), h2 = h(m2);
            if (h1 > best_h) { best_h = h1; best_t = m1; }
            if (h2 > best_h) { best_h = h2; best_t = m2; }
            if (h1 < h2) lo = m1; else hi = m2;
        }
    }

    double shift = best_h;
    if (shift == -inf) return -inf;  // integrand is identically exp(-inf)

    const std::vector<double> edges = peak_trap_edges(ta, tb, best_t, md.identity ? 8 : 16);
    for (int attempt = 0; attempt < 5; ++attempt) {
        double observed_max = shift;
        bool overflow = false;
        auto f = [&](double t) {
            const double v = h(t) - shift;
            if (v > observed_max - shift) observed_max = v + shift;
            if (v > 50.0) {
                overflow = true;
                return std::exp(50.0);
            }
            return std::exp(v);
        };
        try {
            QuadratureResult r = adaptive_edges(f, edges, spec);
            if (!overflow && r.value > 0) return shift + std::log(r.value);
            if (!overflow && r.value <= 0)
                throw DivergentIntegral("integrand is narrower than the quadrature resolution");
        } catch (const DivergentIntegral&) {
            if (!overflow) throw;
        }
        shift = observed_max;  // probe missed the peak; retry with the running max
    }
    throw DivergentIntegral("log_int_exp could not stabilize the integrand");
}

ScalarMinimum minimize_scalar(const Fn& f, Interval bracket, double tol) {
    if (!bracket.finite() || !(bracket.lo < bracket.hi))
        throw NonFinite("minimize_scalar requires a finite bracket");
    std::size_t evals = 0;
    auto eval = [&](double x) {
        const double v = f(x);
        ++evals;
        if (std::isnan(v)) throw NonFinite("objective returned NaN at x=" + std::to_string(x));
        return v;
    };

    // Coarse scan to locate the basin (guards against flat shoulders).
    const int ns = 33;
    double sx = bracket.lo, sv = inf;
    for (int i = 0; i < ns; ++i) {
        const double x = bracket.lo + (bracket.hi - bracket.lo) * i / (ns - 1.0);
        const double v = eval(x);
        if (v < sv) { sv = v; sx = x; }
    }
    const double step = (bracket.hi - bracket.lo) / (ns - 1.0);
    double a = std::max(bracket.lo, sx - step);
    double b = std::min(bracket.hi, sx + step);

    // Brent's method on [a, b].
    const double golden = 0.3819660112501051;
    double x = sx, w = sx, v = sx;
    double fx = sv, fw = sv, fv = sv;
    double d = 0, e = 0;
    for (int iter = 0; iter < 200; ++iter) {
        const double m = 0.5 * (a + b);
        const double tol1 = tol * std::abs(x) + tol * 0.25 + 1e-16;
        const double tol2 = 2.0 * tol1;
        if (std::abs(x - m) <= tol2 - 0.5 * (b - a)) break;
        double u;
        if (std::abs(e) > tol1) {
            const double r = (x - w) * (fx - fv);
            double q = (x - v) * (fx - fw);
            double p = (x - v) * q - (x - w) * r;
            q = 2.0 * (q - r);
            if (q > 0) p = -p;
            q = std::abs(q);
            const double etmp = e;
            e = d;
            if (std::abs(p) >= std::abs(0.5 * q * etmp) || p <= q * (a - x) || p >= q * (b - x)) {
                e = (x >= m) ? a - x : b - x;
                d = golden * e;
            } else {
                d = p / q;
                u = x + d;
                if (u - a < tol2 || b - u < tol2) d = (m - x >= 0) ? tol1 : -tol1;
            }
        } else {
            e = (x >= m) ? a - x : b - x;
            d = golden * e;
        }
        u = (std::abs(d) >= tol1) ? x + d : x + ((d >= 0) ? tol1 : -tol1);
        const double fu = eval(u);
        if (fu <= fx) {
            if (u >= x) a = x; else b = x;
            v = w; fv = fw;
            w = x; fw = fx;
            x = u; fx = fu;
        } else {
            if (u < x) a = u; else b = u;
            if (fu <= fw || w == x) {
                v = w; fv = fw;
                w = u; fw = fu;
            } else if (fu <= fv || v == x || v == w) {
                v = u; fv = fu;
            }
        }
    }

    ScalarMinimum out{x, fx, false, false, evals};
    const double edge = std::max(10.0 * tol, 2.0 * step * 1e-6);
    if (x - bracket.lo <= std::max(edge, 1.001 * (sx == bracket.lo ? step : 0.0)) &&
        sx <= bracket.lo + step) {
        // Descending into the lower edge: report the edge, flagged.
        const double flo = eval(bracket.lo);
        if (flo <= fx || x - bracket.lo <= edge) {
            if (std::isfinite(flo) && flo <= fx) { out.argmin = bracket.lo; out.value = flo; }
            out.at_lower = true;
        }
    }
    if (bracket.hi - x <= edge || (sx >= bracket.hi - step && bracket.hi - x <= 2.0 * step)) {
        const double fhi = eval(bracket.hi);
        if (std::isfinite(fhi) && fhi <= fx) {
            out.argmin = bracket.hi;
            out.value = fhi;
            out.at_upper = true;
        } else if (bracket.hi - x <= edge) {
            out.at_upper = true;
        }
    }
    out.evals = evals;
    return out;
}

namespace {

// Transformed coordinates for minimize_convex: positive coordinates travel in
// log space, free coordinates as-is.
struct Transform {
    std::vector<SignDomain> dom;

    double to_theta(double u, int i) const {
        return dom[i] == SignDomain::positive ? std::exp(u) : u;
    }
    double to_u(double theta, int i) const {
        if (dom[i] == SignDomain::positive)
            return std::log(std::max(theta, 1e-12));
        return theta;
    }
    double lower_cap(int i) const { return dom[i] == SignDomain::positive ? -46.0 : -1e4; }
    double upper_cap(int i) const { return dom[i] == SignDomain::positive ? 46.0 : 1e4; }
};

}  // namespace

ConvexMinimum minimize_convex(const std::function<double(std::span<const double>)>& f,
                              int dim,
                              std::span<const SignDomain> sign_domain,
                              std::span<const double> init,
                              double tol) {
    if (dim <= 0 || static_cast<int>(sign_domain.size()) != dim ||
        static_cast<int>(init.size()) != dim)
        throw NonFinite("minimize_convex: inconsistent dimensions");

    Transform tr{std::vector<SignDomain>(sign_domain.begin(), sign_domain.end())};
    std::vector<double> u(dim), theta(dim);
    for (int i = 0; i < dim; ++i) u[i] = tr.to_u(init[i], i);

    std::size_t evals = 0;
    auto eval_u = [&](std::span<const double> uu) {
        for (int i = 0; i < dim; ++i) theta[i] = tr.to_theta(uu[i], i);
        const double v = f(theta);
        ++evals;
        if (std::isnan(v)) throw NonFinite("minimize_convex objective returned NaN");
        if (v < -1e13) throw Unbounded("objective decreases without bound");
        return v;
    };

    double fbest = eval_u(u);

    // Line minimization along direction d from point u; returns the achieved
    // value and updates u in place. Throws Unbounded when the search runs off
    // to an upper cap while still descending.
    auto line_min = [&](std::vector<double>& base, const std::vector<double>& dir) {
        // Range of step t keeping every coordinate inside its caps.
        double tmin = -inf, tmax = inf;
        for (int i = 0; i < dim; ++i) {
            if (dir[i] == 0.0) continue;
            const double lo = (tr.lower_cap(i) - base[i]) / dir[i];
            const double hi = (tr.upper_cap(i) - base[i]) / dir[i];
            tmin = std::max(tmin, std::min(lo, hi));
            tmax = std::min(tmax, std::max(lo, hi));
        }
        if (!(tmin < tmax)) return eval_u(base);
        std::vector<double> probe(dim);
        auto phi = [&](double t) {
            for (int i = 0; i < dim; ++i) probe[i] = base[i] + t * dir[i];
            return eval_u(probe);
        };
        const double f0 = phi(0.0);
        // Expand a bracket around 0.
        const double step = 0.25;
        double lo = 0, hi = 0;
        const double fplus = phi(std::min(step, tmax));
        const double fminus = phi(std::max(-step, tmin));
        if (f0 <= fplus && f0 <= fminus) {
            lo = std::max(-step, tmin);
            hi = std::min(step, tmax);
        } else {
            const double sgn = (fplus < fminus) ? 1.0 : -1.0;
            double t_prev = 0.0, f_prev = f0;
            double t_cur = sgn * step;
            double f_cur = sgn > 0 ? fplus : fminus;
            for (int k = 0; k < 200; ++k) {
                double t_next = t_cur * 2.618;
                t_next = std::clamp(t_next, tmin, tmax);
                if (t_next == t_cur) {
                    // Hit a cap while descending. A positive coordinate
                    // running to its lower cap is an inactive constraint, not
                    // divergence; anything else still descending is unbounded.
                    bool benign = true;
                    for (int i = 0; i < dim; ++i) {
                        if (dir[i] == 0.0) continue;
                        const double end = base[i] + t_cur * dir[i];
                        const bool at_lower_cap = end <= tr.lower_cap(i) + 1e-9;
                        if (!(tr.dom[i] == SignDomain::positive && at_lower_cap)) {
                            if (std::abs(end) >= std::abs(tr.upper_cap(i)) - 1e-9 ||
                                (tr.dom[i] == SignDomain::free_sign &&
                                 std::abs(end) >= 1e4 - 1e-9))
                                benign = false;
                        }
                    }
                    const bool still_descending =
                        std::isfinite(f_cur) &&
                        (!std::isfinite(f_prev) ||
                         f_cur < f_prev - 1e-12 * std::max(1.0, std::abs(f_prev)));
                    if (!benign && still_descending)
                        throw Unbounded("dual objective decreases without bound");
                    lo = std::min(t_prev, t_cur);
                    hi = std::max(t_prev, t_cur);
                    break;
                }
                const double f_next = phi(t_next);
                if (f_next >= f_cur) {
                    lo = std::min(t_prev, t_next);
                    hi = std::max(t_prev, t_next);
                    break;
                }
                t_prev = t_cur;
                f_prev = f_cur;
                t_cur = t_next;
                f_cur = f_next;
            }
            if (lo == hi) {
                lo = std::min(t_prev, t_cur);
                hi = std::max(t_prev, t_cur);
            }
        }
        if (!(lo < hi)) return f0;
        ScalarMinimum m = minimize_scalar(phi, {lo, hi}, 1e-11 * (1.0 + std::abs(lo) + std::abs(hi)));
        if (m.value <= f0) {
            for (int i = 0; i < dim; ++i)
                base[i] = std::clamp(base[i] + m.argmin * dir[i], tr.lower_cap(i), tr.upper_cap(i));
            return m.value;
        }
        return f0;
    };

    // Powell's direction-set method.
    std::vector<std::vector<double>> dirs(dim, std::vector<double>(dim, 0.0));
    for (int i = 0; i < dim; ++i) dirs[i][i] = 1.0;

    bool converged = false;
    int stall = 0;
    for (int cycle = 0; cycle < 400; ++cycle) {
        const std::vector<double> u0 = u;
        const double f0 = fbest;
        int biggest = 0;
        double biggest_drop = 0;
        for (int i = 0; i < dim; ++i) {
            const double before = fbest;
            fbest = line_min(u, dirs[i]);
            if (before - fbest > biggest_drop) {
                biggest_drop = before - fbest;
                biggest = i;
            }
        }
        if (dim > 1) {
            std::vector<double> newdir(dim);
            double norm = 0;
            for (int i = 0; i < dim; ++i) {
                newdir[i] = u[i] - u0[i];
                norm += newdir[i] * newdir[i];
            }
            if (norm > 1e-24) {
                fbest = line_min(u, newdir);
                dirs.erase(dirs.begin() + biggest);
                dirs.push_back(newdir);
            }
            if (cycle % (3 * dim) == 3 * dim - 1) {
                for (int i = 0; i < dim; ++i) {
                    dirs[i].assign(dim, 0.0);
                    dirs[i][i] = 1.0;
                }
            }
        }
        if (f0 - fbest <= tol * (1.0 + std::abs(fbest))) {
            if (++stall >= 2) {
                converged = true;
                break;
            }
        } else {
            stall = 0;
        }
    }

    ConvexMinimum out;
    out.argmin.resize(dim);
    out.active.resize(dim);
    for (int i = 0; i < dim; ++i) {
        out.argmin[i] = tr.to_theta(u[i], i);
        out.active[i] = std::abs(out.argmin[i]) >= inactive_threshold;
    }
    out.value = fbest;
    out.evals = evals;
    out.converged = converged;
    return out;
}

void gauss_legendre(int n, std::vector<double>& nodes, std::vector<double>& weights) {
    nodes.assign(n, 0.0);
    weights.assign(n, 0.0);
    const int m = (n + 1) / 2;
    for (int i = 0; i < m; ++i) {
        double z = std::cos(pi * (i + 0.75) / (n + 0.5));
        double pp = 0;
        for (int it = 0; it < 100; ++it) {
            double p0 = 1.0, p1 = 0.0;
            for (int j = 0; j < n; ++j) {
                const double p2 = p1;
                p1 = p0;
                p0 = ((2.0 * j + 1.0) * z * p1 - j * p2) / (j + 1.0);
            }
            pp = n * (z * p0 - p1) / (z * z - 1.0);
            const double dz = p0 / pp;
            z -= dz;
            if (std::abs(dz) < 1e-15) break;
        }
        nodes[i] = -z;
        nodes[n - 1 - i] = z;
        weights[i] = 2.0 / ((1.0 - z * z) * pp * pp);
        weights[n - 1 - i] = weights[i];
    }
}

void gauss_legendre(int n, Interval iv, std::vector<double>& nodes, std::vector<double>& weights) {
    if (!iv.finite()) throw NonFinite("gauss_legendre requires a finite interval");
    gauss_legendre(n, nodes, weights);
    const double c = 0.5 * (iv.lo + iv.hi);
    const double h = 0.5 * (iv.hi - iv.lo);
    for (int i = 0; i < n; ++i) {
        nodes[i] = c + h * nodes[i];
        weights[i] *= h;
    }
}

CubicSpline::CubicSpline(std::vector<double> x, std::vector<double> y)
    : x_(std::move(x)), y_(std::move(y)) {
    const std::size_t n = x_.size();
    if (n != y_.size() || n < 2) throw NonFinite("CubicSpline needs >= 2 points");
    m_.assign(n, 0.0);
    if (n == 2) return;
    // Natural spline: tridiagonal solve for second derivatives.
    std::vector<double> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
        const double h0 = x_[i] - x_[i - 1];
        const double h1 = x_[i + 1] - x_[i];
        a[i] = h0;
        b[i] = 2.0 * (h0 + h1);
        c[i] = h1;
        d[i] = 6.0 * ((y_[i + 1] - y_[i]) / h1 - (y_[i] - y_[i - 1]) / h0);
    }
    for (std::size_t i = 2; i + 1 < n; ++i) {
        const double w = a[i] / b[i - 1];
        b[i] -= w * c[i - 1];
        d[i] -= w * d[i - 1];
    }
    for (std::size_t i = n - 2; i >= 1; --i) {
        m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
        if (i == 1) break;
    }
}

double CubicSpline::operator()(double x) const {
    if (x_.empty()) throw NonFinite("empty spline");
    if (x <= x_.front()) return y_.front();
    if (x >= x_.back()) return y_.back();
    std::size_t hi = std::upper_bound(x_.begin(), x_.end(), x) - x_.begin();
    const std::size_t lo = hi - 1;
    const double h = x_[hi] - x_[lo];
    const double t = (x - x_[lo]) / h;
    const double s = 1.0 - t;
    return s * y_[lo] + t * y_[hi] +
           h * h / 6.0 * ((s * s * s - s) * m_[lo] + (t * t * t - t) * m_[hi]);
}

}  // namespace capbound::numerics
