#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "spde/coefficients.hpp"

using namespace spde;

TEST_CASE("cut-off function shape") {
    const CutoffSpec spec(2.0);
    CHECK(cutoff_eval(spec, 0.0) == 1.0);
    CHECK(cutoff_eval(spec, 2.0) == 1.0);
    CHECK(cutoff_eval(spec, 3.0) == 0.0);
    CHECK(cutoff_eval(spec, 7.0) == 0.0);
    for (double x = 1.9; x < 3.1; x += 0.013) {
        const double h = 1e-6;
        const double fd = (cutoff_eval(spec, x + h) - cutoff_eval(spec, x - h)) / (2 * h);
        CHECK(cutoff_slope(spec, x) == doctest::Approx(fd).epsilon(1e-5).scale(1.0));
        CHECK(std::abs(cutoff_slope(spec, x)) <= 1.5);
        CHECK(cutoff_eval(spec, x) >= 0.0);
        CHECK(cutoff_eval(spec, x) <= 1.0);
    }
    CHECK_THROWS(CutoffSpec(0.0));
}

TEST_CASE("multipliers are the u-derivatives of the truncated coefficients") {
    const CutoffSpec spec(1.5);
    for (const auto& pair : {nonlinear_family(), additive_family(), nonlinear_family(0.8, 0.4)}) {
        for (double x : {0.1, 0.5, 0.83}) {
            for (double u = -3.0; u <= 3.0; u += 0.0737) {
                const double h = 1e-6;
                const double dfd = (truncated_drift(pair, spec, x, u + h) - truncated_drift(pair, spec, x, u - h)) / (2 * h);
                const double dsd =
                    (truncated_diffusion(pair, spec, x, u + h) - truncated_diffusion(pair, spec, x, u - h)) / (2 * h);
                const Multipliers m = multiplier_fields(pair, spec, x, u);
                CHECK(m.m == doctest::Approx(dfd).epsilon(1e-6).scale(1.0));
                CHECK(m.m_hat == doctest::Approx(dsd).epsilon(1e-6).scale(1.0));
            }
        }
    }
}

TEST_CASE("truncation vanishes beyond n + 1") {
    const CutoffSpec spec(1.0);
    const CoefficientPair pair = nonlinear_family();
    CHECK(truncated_drift(pair, spec, 0.3, 2.5) == 0.0);
    CHECK(truncated_diffusion(pair, spec, 0.3, -2.5) == 0.0);
    CHECK(truncated_drift(pair, spec, 0.3, 0.5) == pair.f(0.3, 0.5));
}

TEST_CASE("families satisfy the standing assumptions") {
    const auto us = linspace(-8.0, 8.0, 161);
    const auto xs = linspace(0.0, 1.0, 21);
    for (const auto& pair : {additive_family(), nonlinear_family(), make_family("nonlinear", std::vector<double>{0.3, 0.2})}) {
        const AssumptionReport r = validate_assumptions(pair, us, xs);
        CHECK(r.passed);
        CHECK(r.violations.empty());
        CHECK(r.floor_margin >= 0.0);
    }
    CHECK(additive_family().additive);
    CHECK_FALSE(nonlinear_family().additive);
    CHECK_THROWS(make_family("quadratic"));
}

TEST_CASE("violations are reported") {
    CoefficientPair bad = nonlinear_family();
    bad.sigma = [](double, double u) { return 1.0 + u * u; };
    bad.sigma_u = [](double, double u) { return 2.0 * u; };
    const auto us = linspace(-8.0, 8.0, 161);
    const auto xs = linspace(0.0, 1.0, 21);
    const AssumptionReport r = validate_assumptions(bad, us, xs);
    CHECK_FALSE(r.passed);
    CHECK(r.bound_margin_sigma < 0.0);
    CHECK_FALSE(r.violations.empty());

    CoefficientPair degenerate = additive_family();
    degenerate.sigma = [](double x, double) { return x; };
    degenerate.c0 = 0.5;
    CHECK_FALSE(validate_assumptions(degenerate, us, xs).passed);
}

TEST_CASE("initial conditions") {
    InitialCondition::sine(2.0).validate();
    InitialCondition::zero().validate();
    CHECK(InitialCondition::sine(2.0)(0.5) == doctest::Approx(2.0));
    InitialCondition off;
    off.fn = [](double x) { return x; };
    CHECK_THROWS_AS(off.validate(), std::invalid_argument);
}

TEST_CASE("truncated constants dominate the truncated coefficients") {
    const CoefficientPair pair = nonlinear_family();
    const TruncatedConstants c = truncated_constants(pair);
    const CutoffSpec spec(1.0);
    for (double u = -3.0; u <= 3.0; u += 0.01) {
        CHECK(std::abs(truncated_drift(pair, spec, 0.4, u)) <= c.C_f);
        CHECK(std::abs(truncated_diffusion(pair, spec, 0.4, u)) <= c.C_sigma);
        const Multipliers m = multiplier_fields(pair, spec, 0.4, u);
        CHECK(std::abs(m.m) <= c.C_f);
        CHECK(std::abs(m.m_hat) <= c.C_sigma);
    }
}
