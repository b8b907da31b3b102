#include <doctest.h>

#include <cmath>

#include "capbound/epi.hpp"
#include "capbound/volume.hpp"
#include "test_util.hpp"

using namespace capbound;
using namespace capbound::constraints;
using numerics::Interval;

namespace {
constexpr double two_e_over_pi = 1.7305119588645302;  // 2e/pi
}

TEST_SUITE_BEGIN("epi");

TEST_CASE("epi_bound closed forms") {
    for (double p : {0.1, 1.0, 10.0, 100.0}) {
        const double v = 0.5 * std::log(numerics::two_pi_e * p);
        CHECK(epi::epi_bound(v, 1.0).value == doctest::Approx(0.5 * std::log1p(p)).epsilon(1e-12));
    }
    CHECK(epi::epi_bound(-numerics::inf, 1.0).value == 0.0);
    CHECK(epi::epi_bound(0.0, 2.0).value ==
          doctest::Approx(0.5 * std::log1p(1.0 / (numerics::two_pi_e * 2.0))).epsilon(1e-12));
    CHECK_THROWS_AS(epi::epi_bound(0.0, 0.0), NonFinite);
}

TEST_CASE("epi_bound is increasing in v and in 1/sigma^2") {
    double prev = -1;
    for (double v = -2.0; v <= 3.0; v += 0.25) {
        const double cur = epi::epi_bound(v, 1.0).value;
        CHECK(cur > prev);
        prev = cur;
    }
    CHECK(epi::epi_bound(1.0, 0.5).value > epi::epi_bound(1.0, 2.0).value);
}

TEST_CASE("absolute-value bound carries the 2e/pi coefficient") {
    ConstraintSet abs({CostTerm::absolute(1.0)});
    const double v = volume::volume_exponent(abs).v;
    const double value = epi::epi_bound(v, 1.0).value;
    const double coef = std::expm1(2.0 * value);
    CHECK(coef == doctest::Approx(two_e_over_pi).epsilon(1e-9));
    CHECK(std::abs(coef - 1.7306) <= 1e-3);
}

TEST_CASE("snr loss factor properties") {
    // never exceeds the s = 1 evaluation, stays in (0, 1], monotone in u
    double prev = 0;
    for (double u = 0.1; u <= 100.0; u *= 1.35) {
        const double l = epi::snr_loss_factor(u);
        const double b = std::erf(std::sqrt(u) * 0.7071067811865475244);
        CHECK(l <= b * b + 1e-12);
        CHECK(l > 0);
        CHECK(l <= 1.0);
        CHECK(l >= prev - 1e-12);
        prev = l;
    }
    // slack-power regime: the edge value 2u/(pi e)
    for (double u : {0.5, 2.0, 2.9})
        CHECK(epi::snr_loss_factor(u) ==
              doctest::Approx(2.0 * u / (numerics::pi * std::exp(1.0))).epsilon(1e-12));
    CHECK(epi::snr_loss_factor(2.0) == doctest::Approx(0.4684).epsilon(5e-4));
    // u -> infinity: no loss
    CHECK(std::abs(epi::snr_loss_factor(1e4) - 1.0) <= 1e-6);
}

TEST_CASE("peak + power bound reproduces the Smith-model values") {
    struct Row {
        double snr_db, expect;
    } rows[] = {{6.0, 0.5262}, {10.0, 0.8688}, {12.0, 1.0655}};
    for (const Row& r : rows) {
        const double p = std::pow(10.0, r.snr_db / 10.0);
        const auto b = epi::epi_peak_power(p, std::sqrt(2.0 * p), 1.0);
        CHECK(b.value == doctest::Approx(r.expect).epsilon(2e-3));
        CHECK(std::abs(b.value - r.expect) <= 1e-3);
    }
}

TEST_CASE("peak + power agrees with the volume-exponent route") {
    for (auto [p, a] : {std::pair{10.0, std::sqrt(20.0)}, {5.0, 5.0}, {2.0, 1.0}}) {
        const auto lam = epi::epi_peak_power(p, a, 1.0);
        ConstraintSet cs({CostTerm::power(p), CostTerm::peak_well(a)});
        const auto vol = epi::epi_bound(volume::volume_exponent(cs).v, 1.0);
        CHECK(std::abs(lam.value - vol.value) <= 1e-9);
    }
}

TEST_CASE("peak + power approaches the unconstrained capacity") {
    const double p = 3.0;
    const auto b = epi::epi_peak_power(p, std::sqrt(1e4 * p), 1.0);
    CHECK(std::abs(b.value - 0.5 * std::log1p(p)) <= 1e-6);
}

TEST_CASE("quadrature channel: plateau and limits") {
    const double a = 2.0;
    const double plateau = 0.5 * std::log1p(a * a / (2.0 * std::exp(1.0)));
    CHECK(plateau == doctest::Approx(0.2757224).epsilon(1e-7));
    double first = 0;
    for (double p : {2.0, 5.0, 50.0}) {
        const auto b = epi::epi_quadrature(p, a, 1.0);
        CHECK(std::abs(b.value - plateau) <= 1e-8);
        CHECK(b.plateau);
        if (first == 0)
            first = b.value;
        else
            CHECK(std::abs(b.value - first) <= 1e-8);  // independent of P
    }
    // A -> infinity recovers the average-power-only capacity
    const auto wide = epi::epi_quadrature(3.0, 1e4, 1.0);
    CHECK(std::abs(wide.value - 0.5 * std::log1p(3.0)) <= 1e-6);
    CHECK(!epi::epi_quadrature(1.0, 4.0, 1.0).plateau);  // P < A^2/2 side
}

TEST_CASE("uce of the absolute-value curve: tangent segment") {
    auto curve = [](double g) { return 0.5 * std::log1p(two_e_over_pi * g * g); };
    auto env = epi::uce_1d(curve, {0.0, 8.0}, 257);
    REQUIRE(env.tangent_found);
    CHECK(std::abs(env.breakpoint - 1.5054) <= 1e-3);
    CHECK(std::abs(env.slope - 0.5293) <= 1e-3);

    // scalar root oracle: ln(1+t) = 2t/(1+t) at t ~ 3.9216
    double lo = 1.0, hi = 10.0;
    for (int i = 0; i < 100; ++i) {
        const double t = 0.5 * (lo + hi);
        (std::log1p(t) < 2.0 * t / (1.0 + t) ? lo : hi) = t;
    }
    const double t_star = 0.5 * (lo + hi);
    CHECK(t_star == doctest::Approx(3.9216).epsilon(1e-4));
    CHECK(env.breakpoint ==
          doctest::Approx(std::sqrt(t_star / two_e_over_pi)).epsilon(1e-6));
}

TEST_CASE("uce leaves concave bounds unchanged") {
    auto curve = [](double g) { return 0.5 * std::log1p(g); };
    auto env = epi::uce_1d(curve, {0.0, 10.0}, 257);
    CHECK(!env.tangent_found);
    CHECK(env.already_concave);
    for (double g : {0.37, 2.0, 7.5}) CHECK(env(g) == doctest::Approx(curve(g)).epsilon(1e-12));
}

TEST_CASE("uce output is concave and dominates the input") {
    auto curve = [](double g) { return 0.5 * std::log1p(two_e_over_pi * g * g); };
    auto env = epi::uce_1d(curve, {0.0, 8.0}, 257);
    const int n = 400;
    std::vector<double> ys(n);
    for (int i = 0; i < n; ++i) {
        const double g = 8.0 * i / (n - 1.0);
        ys[i] = env(g);
        CHECK(ys[i] >= curve(g) - 1e-12);
    }
    for (int i = 1; i + 1 < n; ++i)
        CHECK(ys[i + 1] - 2.0 * ys[i] + ys[i - 1] <= 1e-9);
}

TEST_SUITE_END();
