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

DualVector dual1(double v, SignDomain d = SignDomain::positive) { return {{v}, {d}}; }

// Closed-form psi for power + peak via the Q-function (independent of the
// quadrature route).
double psi_power_well(double theta, double a) {
    return std::log(std::sqrt(numerics::pi / theta) *
                    (1.0 - 2.0 * testutil::q_series(a * std::sqrt(2.0 * theta))));
}

}  // namespace

TEST_SUITE_BEGIN("volume");

TEST_CASE("psi closed forms") {
    ConstraintSet power({CostTerm::power(1.0)});
    for (double th : {0.1, 0.5, 2.0, 10.0})
        CHECK(psi(power, dual1(th)) ==
              doctest::Approx(0.5 * std::log(numerics::pi / th)).epsilon(1e-10));

    ConstraintSet pw({CostTerm::power(10.0), CostTerm::peak_well(2.5)});
    for (double th : {0.05, 0.4, 1.5})
        CHECK(psi(pw, dual1(th)) == doctest::Approx(psi_power_well(th, 2.5)).epsilon(1e-10));

    ConstraintSet abs({CostTerm::absolute(1.0)});
    for (double th : {0.3, 1.0, 4.0})
        CHECK(psi(abs, dual1(th)) == doctest::Approx(std::log(2.0 / th)).epsilon(1e-10));
}

TEST_CASE("psi over a finite alphabet is a log sum") {
    FinitePointSet pts{{-1.0, 0.0, 1.0}};
    ConstraintSet cs({CostTerm::absolute(1.0)}, pts);
    const double th = 0.7;
    CHECK(psi(cs, dual1(th)) ==
          doctest::Approx(std::log(1.0 + 2.0 * std::exp(-th))).epsilon(1e-14));
}

TEST_CASE("psi detects divergent duals") {
    ConstraintSet abs({CostTerm::absolute(1.0, Mode::equality)});
    CHECK_THROWS_AS(psi(abs, dual1(-1.0, SignDomain::free_sign)), DivergentIntegral);
    ConstraintSet power({CostTerm::power(1.0)});
    CHECK_THROWS_AS(psi(power, dual1(0.0)), DivergentIntegral);
}

TEST_CASE("tilted moments match closed forms") {
    ConstraintSet power({CostTerm::power(2.0)});
    CHECK(tilted_moments(power, dual1(1.0 / (2.0 * 2.0)))[0] ==
          doctest::Approx(2.0).epsilon(1e-9));

    // uniform limit on [-A, A]: second moment A^2/3
    ConstraintSet pw({CostTerm::power(10.0), CostTerm::peak_well(3.0)});
    CHECK(tilted_moments(pw, dual1(0.0))[0] == doctest::Approx(9.0 / 3.0).epsilon(1e-9));

    // absolute value: E|X| = 1/theta by integration by parts
    ConstraintSet abs({CostTerm::absolute(1.0)});
    for (double th : {0.4, 1.0, 3.0})
        CHECK(tilted_moments(abs, dual1(th))[0] == doctest::Approx(1.0 / th).epsilon(1e-9));
}

TEST_CASE("tilted moments equal minus grad psi") {
    ConstraintSet cs({CostTerm::absolute(1.5), CostTerm::power(2.0)});
    testutil::Rng rng(5);
    for (int trial = 0; trial < 8; ++trial) {
        DualVector th{{rng.uniform(0.2, 2.0), rng.uniform(0.2, 2.0)},
                      {SignDomain::positive, SignDomain::positive}};
        const auto mom = tilted_moments(cs, th);
        for (int j = 0; j < 2; ++j) {
            const double h = 1e-6 * th.values[j];
            DualVector up = th, dn = th;
            up.values[j] += h;
            dn.values[j] -= h;
            const double grad = (psi(cs, up) - psi(cs, dn)) / (2.0 * h);
            CHECK(mom[j] == doctest::Approx(-grad).epsilon(1e-6));
        }
    }
}

TEST_CASE("tilted density caches normalizer and moments") {
    ConstraintSet pw({CostTerm::power(5.0), CostTerm::peak_well(5.0)});
    TiltedDensity d(pw, dual1(0.2));
    CHECK(d.log_normalizer() == doctest::Approx(psi_power_well(0.2, 5.0)).epsilon(1e-10));
    CHECK(d.is_power_tilt());
    CHECK(d.power_theta() == 0.2);
    CHECK(d.second_moment() == doctest::Approx(d.moments()[0]).epsilon(1e-12));
    // density integrates to one
    const auto total = numerics::integrate(
        [&](double x) { return std::exp(d.log_density(x)); }, {-5.0, 5.0});
    CHECK(total.value == doctest::Approx(1.0).epsilon(1e-9));
    CHECK(d.log_density(5.1) == -numerics::inf);
}

TEST_CASE("volume exponent: power only equals the Gaussian max-entropy value") {
    for (double p : {0.1, 1.0, 10.0}) {
        ConstraintSet cs({CostTerm::power(p)});
        auto r = volume_exponent(cs);
        CHECK(r.v ==
              doctest::Approx(0.5 * std::log(numerics::two_pi_e * p)).epsilon(1e-9));
        CHECK(r.active[0]);
        CHECK(r.theta_star.values[0] == doctest::Approx(1.0 / (2.0 * p)).epsilon(1e-4));
        CHECK(r.diagnostics.moment_residual <= 1e-6);
    }
}

TEST_CASE("volume exponent: absolute value") {
    for (double g : {0.5, 1.0, 2.0}) {
        ConstraintSet cs({CostTerm::absolute(g)});
        auto r = volume_exponent(cs);
        CHECK(r.v == doctest::Approx(std::log(2.0 * std::exp(1.0) * g)).epsilon(1e-9));
    }
}

TEST_CASE("volume exponent: peak well only") {
    ConstraintSet cs({CostTerm::peak_well(3.0)});
    auto r = volume_exponent(cs);
    CHECK(r.v == doctest::Approx(std::log(6.0)).epsilon(1e-14));
}

TEST_CASE("volume exponent: slack power collapses to the boundary") {
    // P >= A^2/3: the power dual sits at zero and the body is the cube
    ConstraintSet cs({CostTerm::power(10.0), CostTerm::peak_well(5.0)});
    auto r = volume_exponent(cs);
    CHECK(r.v == doctest::Approx(std::log(10.0)).epsilon(1e-12));
    CHECK(!r.active[0]);
    CHECK(r.theta_star.values[0] == 0.0);
}

TEST_CASE("volume exponent: active power against a dense dual grid") {
    // P = 5 < A^2/3 = 25/3, so the power constraint binds; oracle is a dense
    // 1-D grid on the closed-form dual objective.
    ConstraintSet cs({CostTerm::power(5.0), CostTerm::peak_well(5.0)});
    auto r = volume_exponent(cs);
    // the interior optimum sits near 0.075; the series oracle is reliable on
    // this theta range
    double grid_min = numerics::inf;
    for (double th = 1e-5; th <= 0.3; th += 1e-5)
        grid_min = std::min(grid_min, th * 5.0 + psi_power_well(th, 5.0));
    CHECK(r.v == doctest::Approx(grid_min).epsilon(1e-6));
    CHECK(r.v == doctest::Approx(2.1882456).epsilon(1e-6));
    CHECK(r.active[0]);
    CHECK(r.diagnostics.moment_residual <= 1e-6);
}

TEST_CASE("volume exponent: duality sandwich on random duals") {
    ConstraintSet cs({CostTerm::absolute(1.2), CostTerm::power(2.0)});
    auto r = volume_exponent(cs);
    testutil::Rng rng(17);
    for (int trial = 0; trial < 20; ++trial) {
        DualVector th{{rng.uniform(0.05, 3.0), rng.uniform(0.05, 3.0)},
                      {SignDomain::positive, SignDomain::positive}};
        const double upper = th.values[0] * 1.2 + th.values[1] * 2.0 + psi(cs, th);
        CHECK(r.v <= upper + 1e-9);
    }
}

TEST_CASE("volume exponent: redundant constraint removal") {
    // Gamma_abs > sqrt(Gamma_power) makes the absolute-value limit redundant
    ConstraintSet both({CostTerm::absolute(2.0), CostTerm::power(1.0)});
    ConstraintSet power({CostTerm::power(1.0)});
    auto rb = volume_exponent(both);
    auto rp = volume_exponent(power);
    CHECK(!rb.active[0]);
    CHECK(rb.active[1]);
    CHECK(rb.v == doctest::Approx(rp.v).epsilon(1e-8));
}

TEST_CASE("volume exponent: infeasible and contradictory limits") {
    ConstraintSet neg({CostTerm::power(-1.0)});
    CHECK_THROWS_AS(volume_exponent(neg), Unbounded);
    ConstraintSet neg_eq({CostTerm::power(-1.0, Mode::equality)});
    CHECK_THROWS_AS(volume_exponent(neg_eq), Unbounded);
}

TEST_CASE("volume exponent: lone filtered peak goes through the Jacobian") {
    ConstraintSet cs({CostTerm::filtered_peak({2.0}, 3.0)});
    auto r = volume_exponent(cs);
    CHECK(r.v == doctest::Approx(std::log(3.0)).epsilon(1e-14));
    CHECK(r.method == Method::jacobian);

    ConstraintSet mixed({CostTerm::filtered_peak({2.0}, 3.0), CostTerm::power(1.0)});
    CHECK_THROWS_AS(volume_exponent(mixed), UnsupportedKernel);
}

TEST_CASE("filter Jacobian forms agree for minimum-phase filters") {
    const double taps1[1] = {1.0};
    CHECK(filter_jacobian_log(taps1) == 0.0);
    const double taps2[1] = {2.0};
    CHECK(filter_jacobian_log(taps2) == doctest::Approx(std::log(2.0)).epsilon(1e-15));

    const double mp[2] = {1.0, 0.5};
    CHECK(filter_jacobian_log(mp) == 0.0);
    CHECK(std::abs(filter_jacobian_log_freq(mp)) <= 1e-9);

    const double mp2[3] = {2.0, 0.6, 0.1};
    CHECK(filter_jacobian_log_freq(mp2) ==
          doctest::Approx(filter_jacobian_log(mp2)).epsilon(1e-9));

    const double bad[2] = {0.0, 1.0};
    CHECK_THROWS_AS(filter_jacobian_log(bad), ZeroLeadingTap);
}

TEST_SUITE_END();
