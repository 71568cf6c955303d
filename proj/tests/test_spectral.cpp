#include <cmath>
#include <vector>

#include "doctest.h"
#include "monoloc/box_operator.hpp"
#include "monoloc/spectral.hpp"

using namespace monoloc;

namespace {

FrequencyModel golden() {
    std::vector<std::int64_t> a(41, 1);
    a[0] = 0;
    return make_frequency(a);
}

} // namespace

TEST_CASE("ids scale selection records n = s q + r") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable t = ids_build(f, p, 100, linear_grid(-1.0, 21.0, 256));
    CHECK(t.n == 100);
    CHECK(t.q == 55);
    CHECK(t.s == 2);
    CHECK(t.r == -10);
    CHECK(t.error_bound == doctest::Approx(4.0 * 10 / (2.0 * 55) + 40.0 / 55));
}

TEST_CASE("ids is a nondecreasing step profile from 0 to 1") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable t = ids_build(f, p, 233, linear_grid(-2.0, 23.0, 512));
    CHECK(t.values.front() == 0.0);
    CHECK(t.values.back() == 1.0);
    for (std::size_t i = 1; i < t.values.size(); ++i)
        CHECK(t.values[i] >= t.values[i - 1]);
    // value_at interpolates and clamps
    CHECK(t.value_at(-10.0) == 0.0);
    CHECK(t.value_at(100.0) == 1.0);
    const double mid = t.inverse_at(0.5);
    CHECK(t.value_at(mid) == doctest::Approx(0.5).epsilon(1e-6));
}

TEST_CASE("ids inverse check returns levels through the potential") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable t = ids_build(f, p, 144, linear_grid(-1.0, 21.0, 1024));
    InverseCheckReport r = ids_inverse_check(t, p);
    CHECK(r.pass);
    CHECK(r.observed_max <= r.bound);
}

TEST_CASE("thouless closed form for the uniform measure") {
    // N uniform on [0,1]: L(E) = integral_0^1 log|E-t| dt
    IDSTable u = make_synthetic_ids({0.0, 1.0}, {0.0, 1.0});
    CHECK(thouless(u, 2.0) == doctest::Approx(2 * std::log(2.0) - 1).epsilon(1e-9));
    CHECK(thouless(u, 0.5) == doctest::Approx(-(1 + std::log(2.0))).epsilon(1e-9));
    // E inside the support where the singularity sits at an endpoint
    CHECK(thouless(u, 0.0) == doctest::Approx(-1.0).epsilon(1e-9));
}

TEST_CASE("thouless handles point masses analytically") {
    // atoms of weight 1/2 at -1 and +1: L(E) = (log|E+1| + log|E-1|)/2
    IDSTable a = make_synthetic_ids({-1.0, -1.0, 1.0, 1.0}, {0.0, 0.5, 0.5, 1.0});
    CHECK(thouless(a, 3.0) ==
          doctest::Approx(0.5 * std::log(4.0) + 0.5 * std::log(2.0)).epsilon(1e-9));
    CHECK(thouless(a, 0.0) == doctest::Approx(0.0).epsilon(1e-9));
}

TEST_CASE("lyapunov floor holds for strong coupling") {
    FrequencyModel f = golden();
    for (double gamma : {10.0, 20.0, 40.0}) {
        MonotonePotential p = make_sawtooth(gamma, 0.0);
        IDSTable t = ids_build(f, p, 233, linear_grid(-1.0, gamma + 1.0, 1024));
        LyapunovTable ly = lyapunov_build(t);
        FloorCheckReport r = lyapunov_floor_check(ly, gamma, 0.02);
        INFO("gamma = ", gamma, " min = ", r.observed_min, " floor = ", r.floor);
        CHECK(r.pass);
        CHECK(r.floor == doctest::Approx(std::log(gamma / (2 * std::exp(1.0)))));
    }
}

TEST_CASE("thouless matches direct transfer matrix growth") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable t = ids_build(f, p, 987, linear_grid(-1.0, 21.0, 1024));
    for (double frac : {0.2, 0.5, 0.8}) {
        const double E = t.inverse_at(frac);
        const double th = thouless(t, E);
        const double tr = transfer_lognorm(0.7357, f, p, E, 2000);
        INFO("E = ", E, " thouless = ", th, " transfer = ", tr);
        CHECK(std::fabs(th - tr) / std::max(std::fabs(th), 0.2) <= 0.05);
    }
}

TEST_CASE("banded thouless converges to the full integral") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable t = ids_build(f, p, 233, linear_grid(-1.0, 21.0, 1024));
    const double E = t.inverse_at(0.4);
    const double full = thouless(t, E);
    const double wide = thouless_banded(t, E, make_cutoffs(1e-9, 1e6));
    CHECK(wide == doctest::Approx(full).epsilon(1e-6));
    // the correction term is exactly the gap
    CutoffPair cut = make_cutoffs(1e-3, 30.0);
    CHECK(l_corr(t, E, cut) ==
          doctest::Approx(std::fabs(full - thouless_banded(t, E, cut))).epsilon(1e-9));
}

TEST_CASE("default grid refuses unbounded potentials") {
    MonotonePotential p = make_log_singular(5.0, 1.0);
    CHECK_THROWS(default_energy_grid(p));
    MonotonePotential s = make_sawtooth(5.0, 0.0);
    auto g = default_energy_grid(s, 64);
    CHECK(g.front() == doctest::Approx(s.inf_value() - 3));
    CHECK(g.back() == doctest::Approx(s.sup_value() + 3));
}

TEST_CASE("cutoff constructor enforces the standing assumption") {
    CHECK_THROWS(make_cutoffs(1.5, 100.0)); // B_minus must stay below 1
    CHECK_THROWS(make_cutoffs(0.1, 5.0));   // B_plus must exceed 10
    CutoffPair c = make_cutoffs(0.01, 55.0);
    CHECK(c.B_plus_prime() == doctest::Approx(59.0));
}
