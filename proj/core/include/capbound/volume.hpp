#pragma once

#include <optional>
#include <span>
#include <vector>

#include "capbound/constraints.hpp"
#include "capbound/numerics.hpp"

namespace capbound::volume {

using constraints::ConstraintSet;
using constraints::CostTerm;

// Multiplier vector theta with per-coordinate sign domain. Coordinates align
// with ConstraintSet::dual_indices(): inequality terms are sign-constrained
// positive, equality terms are sign-free.
struct DualVector {
    std::vector<double> values;
    std::vector<numerics::SignDomain> sign_domain;

    std::size_t size() const { return values.size(); }
};

// Default dual start: theta_j = 1 / (2 max(Gamma_j, 1e-6)) on inequality
// coordinates, 0 on equality (sign-free) coordinates.
DualVector default_dual(const ConstraintSet& cs);

// psi(theta) = log int_support exp{-theta . phi(x)} dx (sum over a finite
// alphabet). Requires every dual term to be memoryless (window 1). Throws
// DivergentIntegral when theta lies outside the integrability region.
double psi(const ConstraintSet& cs, const DualVector& theta,
           const numerics::QuadratureSpec& spec = {});

// E_theta[phi_j(X)] for each dual term; equals -grad psi(theta) to quadrature
// tolerance.
std::vector<double> tilted_moments(const ConstraintSet& cs, const DualVector& theta,
                                   const numerics::QuadratureSpec& spec = {});

// Single-letter density proportional to exp{-theta . phi(x)} on the support,
// with cached normalizer and moments. Immutable after construction.
class TiltedDensity {
public:
    TiltedDensity(const ConstraintSet& cs, DualVector theta,
                  const numerics::QuadratureSpec& spec = {});

    const DualVector& theta() const { return theta_; }
    double log_normalizer() const { return log_normalizer_; }  // psi(theta)
    const std::vector<double>& moments() const { return moments_; }
    const constraints::Support& support() const { return support_; }

    // log density at x (intervals only; -inf outside the support).
    double log_density(double x) const;
    // Point masses for a finite alphabet (aligned with the support points).
    const std::vector<double>& masses() const { return masses_; }

    // True when the tilt involves only squared-amplitude terms on an
    // interval, so downstream convolutions have closed forms.
    bool is_power_tilt() const { return power_tilt_; }
    double power_theta() const { return power_theta_; }

    double second_moment(const numerics::QuadratureSpec& spec = {}) const;

private:
    std::vector<CostTerm> dual_terms_;
    constraints::Support support_;
    DualVector theta_;
    double log_normalizer_ = 0;
    std::vector<double> moments_;
    std::vector<double> masses_;
    bool power_tilt_ = false;
    double power_theta_ = 0;
};

enum class Method { dual, rayleigh, nystrom, collatz_wielandt, donsker_varadhan, jacobian };

// Result of a dual minimization with boundary coordinates pinned at zero.
struct DualSolve {
    std::vector<double> theta;
    std::vector<bool> active;
    double value = 0;
    std::size_t evals = 0;
    bool converged = true;
};

// Minimizes a convex objective over the sign-constrained dual domain,
// re-solving with collapsed coordinates fixed at exactly zero until the
// active set is stable. Coordinates flagged in pin_zero stay at zero from
// the start (degenerate directions). Shared by the volume exponent and the
// mutual-information bounds.
DualSolve minimize_dual_objective(const std::function<double(std::span<const double>)>& objective,
                                  const DualVector& init, double tol,
                                  const std::vector<bool>& pin_zero = {});

// Flags dual terms whose cost is constant across a finite alphabet: their
// multiplier is indeterminate (the constraint is vacuous or always tight),
// so it is pinned at the canonical value zero.
std::vector<bool> degenerate_duals(const ConstraintSet& cs);

struct VolumeReport {
    double v = 0;  // nats per dimension
    DualVector theta_star;
    std::vector<bool> active;
    Method method = Method::dual;
    struct Diagnostics {
        double moment_residual = 0;  // max relative |E_theta[phi_j] - Gamma_j| on active coords
        std::size_t objective_evals = 0;
        int nystrom_n = 0;
        bool optimizer_converged = true;
    } diagnostics;
};

struct VolumeOptions {
    numerics::QuadratureSpec quad;
    double opt_tol = 1e-11;
    int nystrom_n = 400;
};

// Volume exponent v(Gamma) = inf over admissible theta of
// {theta . Gamma + psi(theta)}. Memoryless sets go through the scalar psi;
// sliding-window sets (window <= 3, finite support) through the Nystrom
// spectral radius; a lone filtered-peak constraint through the filter
// Jacobian. Coordinates driven to the boundary are re-solved at exactly zero
// and flagged inactive.
VolumeReport volume_exponent(const ConstraintSet& cs, const VolumeOptions& opts = {});

// Sliding-window kernel K(x_1, ..., x_m) = exp{-theta . phi(window)} on a
// finite support box. Memoryless terms are spread uniformly over the window
// slots so that symmetric constraints give a symmetric kernel.
struct KernelSpec {
    int window = 2;
    DualVector theta;
    std::vector<CostTerm> terms;  // aligned with theta
    numerics::Interval support;
    bool symmetric = true;

    double log_kernel(std::span<const double> w) const;

    static KernelSpec from(const ConstraintSet& cs, const DualVector& theta);
};

struct RayleighFamily {
    enum class Kind { constant, exponential };
    Kind kind = Kind::constant;
    std::vector<double> alphas;  // exponential family grid (0 is always included)

    static RayleighFamily constant() { return {}; }
    static RayleighFamily exponential(std::vector<double> alphas);
};

// Certified lower bound on psi from the Rayleigh quotient over the chosen
// test-function family. Symmetric m = 2 kernels on finite support only.
double kernel_psi_rayleigh(const KernelSpec& k, const RayleighFamily& family,
                           const numerics::QuadratureSpec& spec = {});

struct NystromSolution {
    double psi = 0;
    double eigenvalue = 0;
    int n = 0;
    std::vector<double> nodes;
    std::vector<double> weights;
    std::vector<double> eigvec;  // eigenfunction values at the nodes, max 1
};

// Gauss-Legendre discretization of the sliding-window operator; power
// iteration for the dominant eigenvalue, refined by doubling the grid until
// |delta psi| <= refine_tol.
NystromSolution kernel_psi_nystrom_full(const KernelSpec& k, int grid_n = 400,
                                        double refine_tol = 1e-6);
double kernel_psi_nystrom(const KernelSpec& k, int grid_n = 400);

struct CwBracket {
    double lower = 0;
    double upper = 0;
};

// Collatz-Wielandt bracket log inf (Lg)/g <= psi <= log sup (Lg)/g for a
// strictly positive test function g on the support.
CwBracket kernel_psi_collatz(const KernelSpec& k, const numerics::Fn& g,
                             const numerics::QuadratureSpec& spec = {});

// Lower bound E_pi[log Z(theta, X)] from the kernel-normalized transition
// density and its stationary distribution on the Nystrom grid.
double donsker_varadhan_psi(const KernelSpec& k, int grid_n = 400);

// log |h0| of a causal filter: per-dimension log Jacobian of the filtering
// map. The frequency-domain form (1/2pi) int log|H(e^{jw})| dw agrees for
// minimum-phase filters.
double filter_jacobian_log(std::span<const double> taps);
double filter_jacobian_log_freq(std::span<const double> taps,
                                const numerics::QuadratureSpec& spec = {});

}  // namespace capbound::volume
