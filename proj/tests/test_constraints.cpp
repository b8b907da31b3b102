#include <doctest.h>

#include <cmath>
#include <vector>

#include "capbound/constraints.hpp"
#include "test_util.hpp"

using namespace capbound;
using namespace capbound::constraints;
using numerics::Interval;

TEST_SUITE_BEGIN("constraints");

TEST_CASE("evaluate_cost per kind") {
    const double w1[1] = {3.0};
    CHECK(evaluate_cost(CostTerm::power(1.0), w1) == 9.0);
    CHECK(evaluate_cost(CostTerm::absolute(1.0), {w1, 1}) == 3.0);

    const double peak_in[1] = {0.5};
    const double peak_out[1] = {1.5};
    CHECK(evaluate_cost(CostTerm::peak_well(1.0), peak_in) == 0.0);
    CHECK(evaluate_cost(CostTerm::peak_well(1.0), peak_out) == numerics::inf);

    const double w2[2] = {2.0, -1.0};
    CHECK(evaluate_cost(CostTerm::correlation(1, 0.0), w2) == -2.0);

    const double m4[1] = {2.0};
    CHECK(evaluate_cost(CostTerm::moment(4.0, 1.0), m4) == 16.0);

    const double wp[2] = {1.0, 3.0};
    CHECK(evaluate_cost(CostTerm::window_avg_power(2, 1.0), wp) == 5.0);

    // y_t = h0 x_t + h1 x_{t-1}; window is oldest first
    const double fp[2] = {2.0, 1.0};
    CHECK(evaluate_cost(CostTerm::filtered_peak({1.0, 0.5}, 1.9), fp) == numerics::inf);
    CHECK(evaluate_cost(CostTerm::filtered_peak({1.0, 0.5}, 2.0), fp) == 0.0);
}

TEST_CASE("evaluate_cost window mismatch") {
    const double w2[2] = {1.0, 2.0};
    CHECK_THROWS_AS(evaluate_cost(CostTerm::power(1.0), w2), WindowMismatch);
    const double w1[1] = {1.0};
    CHECK_THROWS_AS(evaluate_cost(CostTerm::correlation(1, 0.0), w1), WindowMismatch);
}

TEST_CASE("is_feasible basics") {
    ConstraintSet power_only({CostTerm::power(1.0)});
    const std::vector<double> zeros(4, 0.0);
    CHECK(is_feasible(power_only, zeros));

    ConstraintSet both({CostTerm::power(1.0), CostTerm::peak_well(1.0)});
    const std::vector<double> peaked = {1.1, 0.0, 0.0, 0.0};
    CHECK(!is_feasible(both, peaked));

    // boundary inclusion: sum = n Gamma is allowed
    const std::vector<double> boundary = {1.0, 1.0};
    CHECK(is_feasible(power_only, boundary));
}

TEST_CASE("equality feasibility implies inequality feasibility") {
    testutil::Rng rng(3);
    ConstraintSet eq({CostTerm::power(0.5, Mode::equality)});
    ConstraintSet ineq({CostTerm::power(0.5)});
    for (int trial = 0; trial < 50; ++trial) {
        std::vector<double> x(6);
        for (double& v : x) v = rng.uniform(-1.0, 1.0);
        // rescale to make the equality hold exactly
        double s = 0;
        for (double v : x) s += v * v;
        const double scale = std::sqrt(0.5 * x.size() / s);
        for (double& v : x) v *= scale;
        CHECK(is_feasible(eq, x));
        CHECK(is_feasible(ineq, x));
    }
    const std::vector<double> off = {1.0, 0.0, 0.0, 0.0, 0.0, 0.0};
    CHECK(!is_feasible(eq, off));
    CHECK(is_feasible(ineq, off));
}

TEST_CASE("feasibility is monotone in the limits") {
    testutil::Rng rng(11);
    for (int trial = 0; trial < 40; ++trial) {
        const double g1 = rng.uniform(0.2, 2.0);
        const double g2 = rng.uniform(0.2, 2.0);
        ConstraintSet cs({CostTerm::power(g1), CostTerm::absolute(g2)});
        ConstraintSet larger({CostTerm::power(g1 + rng.uniform(0.0, 1.0)),
                              CostTerm::absolute(g2 + rng.uniform(0.0, 1.0))});
        std::vector<double> x(5);
        for (double& v : x) v = rng.uniform(-1.5, 1.5);
        if (is_feasible(cs, x)) CHECK(is_feasible(larger, x));
    }
}

TEST_CASE("uniform draws from the support with slack limits are feasible") {
    // |x| <= 2 per letter forces sum x^2 <= 4n < 5n, pointwise
    ConstraintSet cs({CostTerm::power(5.0), CostTerm::peak_well(2.0)});
    testutil::Rng rng(23);
    for (int trial = 0; trial < 100; ++trial) {
        std::vector<double> x(8);
        for (double& v : x) v = rng.uniform(-2.0, 2.0);
        CHECK(is_feasible(cs, x));
    }
}

TEST_CASE("effective support") {
    ConstraintSet pw({CostTerm::power(1.0), CostTerm::peak_well(5.0)});
    CHECK(pw.support_interval().lo == -5.0);
    CHECK(pw.support_interval().hi == 5.0);

    ConstraintSet p({CostTerm::power(1.0)});
    CHECK(!p.has_finite_support());

    ConstraintSet nested({CostTerm::peak_well(3.0), CostTerm::peak_well(1.0)});
    CHECK(nested.support_interval().hi == 1.0);

    // wells never carry a dual coordinate
    CHECK(pw.dual_size() == 1);
    CHECK(pw.dual_term(0).kind == CostKind::power);
    CHECK(nested.dual_size() == 0);
}

TEST_CASE("finite alphabets intersect with the wells") {
    FinitePointSet pts{{-5.0, 0.0, 5.0}};
    ConstraintSet cs({CostTerm::peak_well(1.0)}, pts);
    const auto& kept = std::get<FinitePointSet>(cs.support());
    REQUIRE(kept.points.size() == 1);
    CHECK(kept.points[0] == 0.0);

    FinitePointSet outside{{-5.0, 5.0}};
    CHECK_THROWS_AS(ConstraintSet({CostTerm::peak_well(1.0)}, outside), EmptySupport);
}

TEST_CASE("window bookkeeping") {
    ConstraintSet cs({CostTerm::correlation(2, 0.1), CostTerm::power(1.0)});
    CHECK(cs.max_window() == 3);
    CHECK(cs.dual_size() == 2);
    const std::vector<double> too_short = {1.0, 2.0};
    CHECK(!is_feasible(cs, too_short));
}

TEST_SUITE_END();
