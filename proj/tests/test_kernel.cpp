#include <doctest.h>

#include <cmath>

#include "capbound/volume.hpp"
#include "test_util.hpp"

using namespace capbound;
using namespace capbound::constraints;
using namespace capbound::volume;
using numerics::Interval;
using numerics::SignDomain;

namespace {

// K(x, x') = exp(-theta x x') on [-a, a]^2.
KernelSpec corr_kernel(double theta, double a) {
    ConstraintSet cs({CostTerm::correlation(1, 0.0, Mode::equality), CostTerm::peak_well(a)});
    return KernelSpec::from(cs, DualVector{{theta}, {SignDomain::free_sign}});
}

// K(x, x') = exp(-t1 (x^2 + x'^2)/2 - t2 x x') on [-a, a]^2; its dominant
// eigenfunction is Gaussian, so psi = 0.5 log(2 pi / (t1 + sqrt(t1^2 - t2^2)))
// up to truncation error.
KernelSpec gaussian_kernel(double t1, double t2, double a) {
    ConstraintSet cs({CostTerm::window_avg_power(2, 1.0),
                      CostTerm::correlation(1, 0.0, Mode::equality), CostTerm::peak_well(a)});
    return KernelSpec::from(cs, DualVector{{t1, t2}, {SignDomain::positive,
                                                      SignDomain::free_sign}});
}

double gaussian_psi_closed(double t1, double t2) {
    return 0.5 * std::log(2.0 * numerics::pi / (t1 + std::sqrt(t1 * t1 - t2 * t2)));
}

}  // namespace

TEST_SUITE_BEGIN("kernel");

TEST_CASE("kernel spec spreads letter costs symmetrically") {
    KernelSpec k = gaussian_kernel(0.8, -0.5, 4.0);
    CHECK(k.window == 2);
    CHECK(k.symmetric);
    const double w[2] = {1.0, 2.0};
    const double wr[2] = {2.0, 1.0};
    CHECK(k.log_kernel(w) ==
          doctest::Approx(-0.8 * (1.0 + 4.0) / 2.0 + 0.5 * 2.0).epsilon(1e-14));
    CHECK(k.log_kernel(w) == doctest::Approx(k.log_kernel(wr)).epsilon(1e-14));
}

TEST_CASE("rayleigh constant family reproduces the Shi closed form") {
    for (auto [theta, a] : {std::pair{1.0, 1.0}, {0.5, 1.3}, {-0.8, 0.9}}) {
        KernelSpec k = corr_kernel(theta, a);
        const double got = kernel_psi_rayleigh(k, RayleighFamily::constant());
        const double closed = std::log(2.0 / (a * std::abs(theta)) *
                                       testutil::shi_series(a * a * std::abs(theta)));
        CHECK(got == doctest::Approx(closed).epsilon(1e-9));
    }
}

TEST_CASE("rayleigh at theta -> 0 recovers the box") {
    KernelSpec k = corr_kernel(0.0, 2.0);
    CHECK(kernel_psi_rayleigh(k, RayleighFamily::constant()) ==
          doctest::Approx(std::log(4.0)).epsilon(1e-10));
}

TEST_CASE("exponential family dominates the constant family") {
    KernelSpec k = corr_kernel(1.0, 1.0);
    const double c = kernel_psi_rayleigh(k, RayleighFamily::constant());
    std::vector<double> grid;
    for (int i = -10; i <= 10; ++i) grid.push_back(0.15 * i);
    const double e = kernel_psi_rayleigh(k, RayleighFamily::exponential(grid));
    CHECK(e >= c - 1e-12);
}

TEST_CASE("rayleigh rejects unsupported kernels") {
    ConstraintSet cs({CostTerm::correlation(2, 0.0, Mode::equality), CostTerm::peak_well(1.0)});
    KernelSpec k = KernelSpec::from(cs, DualVector{{1.0}, {SignDomain::free_sign}});
    CHECK(k.window == 3);
    CHECK_THROWS_AS(kernel_psi_rayleigh(k, RayleighFamily::constant()), UnsupportedKernel);
}

TEST_CASE("nystrom: rank-one kernel is exact at any grid") {
    KernelSpec k = corr_kernel(0.0, 2.5);
    for (int n : {2, 8, 64}) {
        NystromSolution s = kernel_psi_nystrom_full(k, n, numerics::inf);
        CHECK(s.psi == doctest::Approx(std::log(5.0)).epsilon(1e-12));
    }
}

TEST_CASE("nystrom matches the Gaussian closed form") {
    const double t1 = 5.0 / 6.0, t2 = -2.0 / 3.0;
    KernelSpec k = gaussian_kernel(t1, t2, 8.0);
    CHECK(kernel_psi_nystrom(k, 400) ==
          doctest::Approx(gaussian_psi_closed(t1, t2)).epsilon(1e-6));
}

TEST_CASE("nystrom dominates the Rayleigh lower bound") {
    KernelSpec k = corr_kernel(1.0, 1.0);
    const double rayleigh = kernel_psi_rayleigh(k, RayleighFamily::constant());
    const double nystrom = kernel_psi_nystrom(k, 400);
    CHECK(std::exp(rayleigh) == doctest::Approx(2.1145).epsilon(1e-4));
    CHECK(nystrom >= rayleigh - 1e-10);
}

TEST_CASE("nystrom window-3 state aggregation") {
    // kernel identically one: spectral radius is the box length
    ConstraintSet cs({CostTerm::correlation(2, 0.0, Mode::equality), CostTerm::peak_well(1.5)});
    KernelSpec k = KernelSpec::from(cs, DualVector{{0.0}, {SignDomain::free_sign}});
    NystromSolution s = kernel_psi_nystrom_full(k, 24, numerics::inf);
    CHECK(s.psi == doctest::Approx(std::log(3.0)).epsilon(1e-10));

    // A lag-2 coupling splits the chain into independent odd and even lag-1
    // chains, so its per-letter exponent equals the lag-1 value at the same
    // theta and box.
    KernelSpec k2 = KernelSpec::from(cs, DualVector{{0.3}, {SignDomain::free_sign}});
    const double p3 = kernel_psi_nystrom_full(k2, 24, numerics::inf).psi;
    KernelSpec k1 = corr_kernel(0.3, 1.5);
    const double p2 = kernel_psi_nystrom(k1, 200);
    CHECK(p3 == doctest::Approx(p2).epsilon(1e-6));
}

TEST_CASE("collatz-wielandt brackets") {
    // kernel identically one with g = 1: (Lg)/g is constant
    KernelSpec ones = corr_kernel(0.0, 2.0);
    CwBracket b0 = kernel_psi_collatz(ones, [](double) { return 1.0; });
    CHECK(b0.lower == doctest::Approx(std::log(4.0)).epsilon(1e-9));
    CHECK(b0.upper == doctest::Approx(std::log(4.0)).epsilon(1e-9));

    // e^{-x x'} on [-1, 1] with g = 1: (Lg)(x) = 2 sinh(x)/x, so the bracket
    // is [log 2, log(2 sinh 1)]
    KernelSpec k = corr_kernel(1.0, 1.0);
    CwBracket b = kernel_psi_collatz(k, [](double) { return 1.0; });
    CHECK(b.lower == doctest::Approx(std::log(2.0)).epsilon(1e-8));
    CHECK(b.upper == doctest::Approx(std::log(2.0 * std::sinh(1.0))).epsilon(1e-8));
    CHECK(b.upper - b.lower < 0.2);
    const double nystrom = kernel_psi_nystrom(k, 400);
    CHECK(b.lower <= nystrom + 1e-9);
    CHECK(nystrom <= b.upper + 1e-9);
}

TEST_CASE("collatz-wielandt collapses on the nystrom eigenvector") {
    KernelSpec k = corr_kernel(1.0, 1.0);
    NystromSolution s = kernel_psi_nystrom_full(k, 400, numerics::inf);
    numerics::CubicSpline g(s.nodes, s.eigvec);
    CwBracket b = kernel_psi_collatz(k, [&](double x) { return g(x); });
    CHECK(b.upper - b.lower < 1e-3);
    CHECK(b.lower <= s.psi + 1e-6);
    CHECK(s.psi <= b.upper + 1e-6);
}

TEST_CASE("collatz-wielandt requires a positive test function") {
    KernelSpec k = corr_kernel(1.0, 1.0);
    CHECK_THROWS_AS(kernel_psi_collatz(k, [](double x) { return x; }),
                    NonPositiveTestFunction);
}

TEST_CASE("donsker-varadhan: exact for the rank-one kernel") {
    KernelSpec ones = corr_kernel(0.0, 2.0);
    CHECK(donsker_varadhan_psi(ones, 200) == doctest::Approx(std::log(4.0)).epsilon(1e-9));
}

TEST_CASE("donsker-varadhan lower-bounds the spectral radius") {
    KernelSpec k = corr_kernel(1.0, 1.0);
    const double dv = donsker_varadhan_psi(k, 400);
    const double nystrom = kernel_psi_nystrom(k, 400);
    CHECK(dv <= nystrom + 1e-9);
    CHECK(dv > std::log(2.0));  // strictly better than the worst CW corner here
}

TEST_CASE("donsker-varadhan matches the AR(1) closed form on Gaussian kernels") {
    // With K = exp(-t1 (x^2+x'^2)/2 - t2 x x'), the kernel-normalized
    // transition is an AR(1) chain: x' | x ~ N(-(t2/t1) x, 1/t1), stationary
    // variance (1/t1)/(1 - (t2/t1)^2), and
    //   E log Z = 0.5 log(2 pi / t1) - 0.5 (t1 - t2^2/t1) Var_st.
    // The chain's stationary variance is (1/t1)/(1-a^2) = 10/3, so the box
    // must be wide in units of *its* deviation for the truncation to vanish.
    const double t1 = 5.0 / 6.0, t2 = -2.0 / 3.0;
    KernelSpec k = gaussian_kernel(t1, t2, 14.0);
    const double a = -t2 / t1;
    const double var_st = (1.0 / t1) / (1.0 - a * a);
    const double closed = 0.5 * std::log(2.0 * numerics::pi / t1) -
                          0.5 * (t1 - t2 * t2 / t1) * var_st;
    const double dv = donsker_varadhan_psi(k, 400);
    CHECK(dv == doctest::Approx(closed).epsilon(1e-4));
    // The kernel-normalized transition is not the variational maximizer here;
    // the gap to the true spectral radius is real and large.
    CHECK(gaussian_psi_closed(t1, t2) - dv > 0.1);
}

TEST_CASE("spectral-radius ordering on the correlation kernel") {
    KernelSpec k = corr_kernel(1.0, 1.0);
    const double rayleigh = kernel_psi_rayleigh(k, RayleighFamily::constant());
    const double dv = donsker_varadhan_psi(k, 400);
    const double nystrom = kernel_psi_nystrom(k, 400);
    CHECK(rayleigh <= dv + 1e-9);
    CHECK(dv <= nystrom + 1e-9);
}

TEST_CASE("sliding-window volume exponent: correlated Gaussian body") {
    const double p = 1.0, rho = 0.5;
    ConstraintSet cs({CostTerm::window_avg_power(2, p),
                      CostTerm::correlation(1, rho * p, Mode::equality),
                      CostTerm::peak_well(8.0 * std::sqrt(p))});
    auto r = volume_exponent(cs);
    CHECK(r.method == Method::nystrom);
    CHECK(r.v == doctest::Approx(0.5 * std::log(numerics::two_pi_e * p * (1 - rho * rho)))
                     .epsilon(1e-4));
    // closed-form optimizer: theta = ((1+rho^2)/(2P(1-rho^2)), -rho/(P(1-rho^2)))
    CHECK(r.theta_star.values[0] == doctest::Approx(5.0 / 6.0).epsilon(1e-3));
    CHECK(r.theta_star.values[1] == doctest::Approx(-2.0 / 3.0).epsilon(1e-3));
}

TEST_CASE("sliding-window volume exponent needs a finite support") {
    ConstraintSet cs({CostTerm::window_avg_power(2, 1.0),
                      CostTerm::correlation(1, 0.5, Mode::equality)});
    CHECK_THROWS_AS(volume_exponent(cs), UnsupportedKernel);
}

TEST_SUITE_END();
