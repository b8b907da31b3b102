#pragma once

#include <functional>
#include <vector>

#include "capbound/numerics.hpp"

namespace capbound::epi {

// Entropy-power capacity lower bound and the pieces it is assembled from.
struct EpiBound {
    double value = 0;        // nats per channel use
    double v_used = 0;       // volume exponent that produced it
    double loss_factor = 1;  // SNR loss lambda, when applicable
    bool plateau = false;    // inner infimum attained at the s -> 0 edge
};

// 0.5 log(1 + exp(2 v) / (2 pi e sigma^2)).
EpiBound epi_bound(double v, double sigma2);

// SNR loss under a peak-amplitude limit as a function of u = A^2 / P:
// lambda(u) = inf_{s>0} (e^{s-1}/s) [1 - 2Q(sqrt(u s))]^2, always in (0, 1].
// The infimum sits at the s -> 0 edge (value 2u / (pi e)) exactly when the
// power constraint is slack, i.e. u <= 3.
double snr_loss_factor(double ratio);

// Peak + average power bound 0.5 log(1 + (P/sigma^2) lambda(A^2/P)).
EpiBound epi_peak_power(double p, double a, double sigma2);

// Quadrature (paired-component) variant with a circular peak constraint:
// 0.5 log(1 + (P/sigma^2) inf_{s>0} (e^{s-1}/s)(1 - e^{-s A^2 / 2P})).
// For P >= A^2/2 the infimum is the s -> 0 limit and the bound equals
// 0.5 log(1 + A^2 / (2 e sigma^2)) independent of P.
EpiBound epi_quadrature(double p, double a, double sigma2);

// Upper concave envelope of a scalar bound curve. The usual case splices a
// linear segment from the origin up to the tangent point Gamma* solving
// Gamma C'(Gamma) = C(Gamma); when no tangent is found the discrete concave
// majorant of the samples is returned, flagged.
struct PiecewiseBound {
    bool tangent_found = false;
    bool already_concave = false;  // every sample sat on its own hull
    double breakpoint = 0;         // Gamma*
    double slope = 0;              // linear slope on [0, Gamma*]
    std::function<double(double)> original;
    // Fallback: concave majorant vertices (sorted by x).
    std::vector<double> hull_x, hull_y;

    double operator()(double gamma) const;
};

PiecewiseBound uce_1d(const std::function<double(double)>& bound, numerics::Interval range,
                      int samples = 512);

}  // namespace capbound::epi
