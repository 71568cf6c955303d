#include <cmath>
#include <limits>

#include "doctest.h"
#include "monoloc/potential.hpp"

using namespace monoloc;

TEST_CASE("sawtooth evaluation and wrap") {
    MonotonePotential p = make_sawtooth(20.0, 3.0);
    CHECK(p.gamma == 20.0);
    CHECK(p.evaluate(0.25) == doctest::Approx(8.0));
    CHECK(p.evaluate(1.25) == doctest::Approx(8.0)); // periodized
    CHECK(p.evaluate(-0.75) == doctest::Approx(8.0));
    CHECK(p.evaluate(0.0) == doctest::Approx(3.0)); // lower limit at the jump
    CHECK(p.sup_value() == doctest::Approx(23.0));
    CHECK(!p.singular_at_zero());
    CHECK(p.bounded_above);
}

TEST_CASE("sawtooth validates as gamma monotone") {
    PotentialValidation v = validate(make_sawtooth(5.0, 0.0), 4000);
    CHECK(v.pass);
    CHECK(v.worst_defect >= -1e-9);
    CHECK(v.log_integral_finite);
}

TEST_CASE("log singular potential is unbounded below but log integrable") {
    MonotonePotential p = make_log_singular(5.0, 1.0);
    CHECK(p.singular_at_zero());
    CHECK(p.inf_value() == -std::numeric_limits<double>::infinity());
    CHECK(p.evaluate(0.5) == doctest::Approx(2.5 + std::log(0.5)));
    PotentialValidation v = validate(p, 4000);
    CHECK(v.pass);
    CHECK(v.log_integral_finite);
}

TEST_CASE("log singular integral matches quadrature of the closed form") {
    // integral of log(1 + |lambda x + mu log x|) is finite and stable across
    // two independent evaluations
    MonotonePotential p = make_log_singular(3.0, 0.5);
    const double direct = potential_log_integral(
        [](double x) { return 3.0 * x + 0.5 * std::log(x); });
    CHECK(p.log_integral == doctest::Approx(direct).epsilon(1e-8));
}

TEST_CASE("step linear keeps monotonicity with an upward jump") {
    MonotonePotential p = make_step_linear(4.0, 0.5, 2.0);
    CHECK(p.evaluate(0.25) == doctest::Approx(1.0));
    CHECK(p.evaluate(0.75) == doctest::Approx(5.0));
    PotentialValidation v = validate(p, 4000);
    CHECK(v.pass);
}

TEST_CASE("a non monotone custom function fails validation") {
    MonotonePotential p = make_custom(
        [](double x) { return std::sin(6.28318530717958647692 * x); }, 1.0, 0.0, true);
    PotentialValidation v = validate(p, 4000);
    CHECK(!v.pass);
    CHECK(v.worst_defect < -0.5);
    // the witness pair really does violate the slope bound
    const double lhs = p.evaluate(v.witness_y) - p.evaluate(v.witness_x);
    CHECK(lhs < p.gamma * (v.witness_y - v.witness_x));
}

TEST_CASE("validation is deterministic in the seed") {
    MonotonePotential p = make_sawtooth(7.0, 1.0);
    PotentialValidation a = validate(p, 2000, 99);
    PotentialValidation b = validate(p, 2000, 99);
    CHECK(a.worst_defect == b.worst_defect);
    CHECK(a.witness_x == b.witness_x);
}
