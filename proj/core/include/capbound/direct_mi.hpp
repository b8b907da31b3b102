#pragma once

#include <vector>

#include "capbound/constraints.hpp"
#include "capbound/numerics.hpp"
#include "capbound/volume.hpp"

namespace capbound::direct_mi {

using constraints::ConstraintSet;

// Asymptotic marginal of one channel output symbol: the single-letter input
// marginal convolved with the noise. Squared-amplitude tilts on an interval
// get a closed form with Q-function factors; everything else is sampled on a
// grid.
struct OutputDensity {
    bool closed_form = false;
    bool symmetric = true;
    double theta = 0;                       // input tilt (0 = uniform)
    double half_width = numerics::inf;      // input support half-width
    double sigma2 = 1;
    double input_log_norm = 0;              // log normalizer of the input density
    double variance = 0;                    // Var(Y)
    numerics::Interval y_window;            // window holding all but ~1e-15 of the mass
    numerics::CubicSpline log_grid;         // grid representation of log p_Y
    double norm_error = 0;                  // |int p_Y - 1| recheck

    double log_pdf(double y) const;
    double pdf(double y) const { return std::exp(log_pdf(y)); }
};

struct DirectBoundOptions {
    numerics::QuadratureSpec quad;
    double opt_tol = 1e-10;
    volume::VolumeOptions volume;
};

struct DirectBoundReport {
    double value = 0;   // nats per channel use
    double v_used = 0;  // volume exponent entering the bound
    volume::DualVector theta_star_volume;
    std::vector<bool> volume_active;
    volume::DualVector theta_star_bound;
    std::vector<bool> bound_active;
    struct Diagnostics {
        double y_half_width = 0;
        double output_norm_error = 0;
        double dual_inf = 0;  // the subtracted infimum, so value is recomputable
        std::size_t objective_evals = 0;
    } diagnostics;
};

// zeta_theta(y) = int_support exp{-theta . phi(x) - (y-x)^2/(2 sigma^2)}
//                 / sqrt(2 pi sigma^2) dx.
// Squared-amplitude tilts use the Q-function closed form as a fast path.
double log_zeta(const ConstraintSet& cs, const volume::DualVector& theta, double y, double sigma2,
                const numerics::QuadratureSpec& spec = {});
double zeta(const ConstraintSet& cs, const volume::DualVector& theta, double y, double sigma2,
            const numerics::QuadratureSpec& spec = {});

// Single-letter input marginal induced by the uniform distribution over the
// constraint body: the tilted density at the volume-exponent optimizer. For
// power + peak sets the tilt is refined by bisection on the monotone
// second-moment map (uniform exactly when P >= A^2/3).
volume::TiltedDensity asymptotic_input_marginal(const ConstraintSet& cs,
                                                const volume::VolumeOptions& opts = {});

OutputDensity output_marginal(const volume::TiltedDensity& input, double sigma2,
                              const numerics::QuadratureSpec& spec = {});

// Capacity lower bound
//   v(Gamma) - 0.5 log(2 pi e sigma^2)
//     - inf_theta { theta . Gamma + E_pY[ log zeta_theta(Y) ] }.
// Memoryless constraint sets only.
DirectBoundReport direct_bound(const ConstraintSet& cs, double sigma2,
                               const DirectBoundOptions& opts = {});

// log J(a, b) with J(a, b) = int_{-A}^{A} exp{a x^2 + b x} dx, total for any
// sign of a (the domain is finite). a < 0 goes through a stable Q-function
// form; otherwise log-stabilized quadrature.
double log_j_integral(double a, double b, double half_width,
                      const numerics::QuadratureSpec& spec = {});

// Input family q(x) proportional to exp{alpha |x|^2} inside the power+peak
// body. theta_star is filled by tilted_direct_bound.
struct TiltedInputSpec {
    double alpha = 0;
    double half_width = 0;  // A
    double power = 0;       // P
    double theta_star = 0;  // minimizer of theta P + log J(alpha - theta, 0)
};

// C_1 bound for the alpha-tilted input; alpha = 0 recovers direct_bound on
// the power + peak set.
DirectBoundReport tilted_direct_bound(TiltedInputSpec& spec, double sigma2,
                                      const DirectBoundOptions& opts = {});

// Jensen / change-of-measure pair bound. Any (s2, alpha) yields a valid
// bound; (sigma^2, 1) recovers the plain Jensen chain.
DirectBoundReport jensen_pair_bound(const ConstraintSet& cs, double sigma2, double s2,
                                    double alpha, const DirectBoundOptions& opts = {});

}  // namespace capbound::direct_mi
