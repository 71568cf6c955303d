#include <cmath>
#include <algorithm>
#include <cstdint>
#include <vector>

#include "doctest.h"
#include "monoloc/arithmetic.hpp"

using namespace monoloc;

namespace {

FrequencyModel golden(int terms) {
    std::vector<std::int64_t> a(std::size_t(terms) + 1, 1);
    a[0] = 0;
    return make_frequency(a);
}

FrequencyModel silver(int terms) {
    std::vector<std::int64_t> a(std::size_t(terms) + 1, 2);
    a[0] = 0;
    return make_frequency(a);
}

} // namespace

TEST_CASE("golden convergents are Fibonacci numbers") {
    FrequencyModel f = golden(30);
    // q_k = F_{k+1}: 1 1 2 3 5 8 ...
    const std::int64_t expect[] = {1, 1, 2, 3, 5, 8, 13, 21, 34, 55};
    for (int k = 0; k < 10; ++k)
        CHECK(f.cf.convergent_denominators[std::size_t(k)] == expect[k]);
    CHECK(f.cf.convergent_denominators[30] == 1346269); // F_31
    CHECK(f.value() == doctest::Approx(0.6180339887498949).epsilon(1e-12));
}

TEST_CASE("silver convergents") {
    FrequencyModel f = silver(20);
    const std::int64_t expect[] = {1, 2, 5, 12, 29, 70, 169};
    for (int k = 0; k < 7; ++k)
        CHECK(f.cf.convergent_denominators[std::size_t(k)] == expect[k]);
    // the model is the rational truncation; at 20 terms it sits within 1e-15
    CHECK(f.value() == doctest::Approx(std::sqrt(2.0) - 1).epsilon(1e-12));
}

TEST_CASE("recurrence holds for mixed coefficients") {
    FrequencyModel f = make_frequency(std::vector<std::int64_t>{0, 2, 1, 3, 1, 4, 7});
    const auto& q = f.cf.convergent_denominators;
    const auto& p = f.cf.convergent_numerators;
    const auto& a = f.cf.coefficients;
    for (std::size_t k = 2; k < q.size(); ++k) {
        CHECK(q[k] == a[k] * q[k - 1] + q[k - 2]);
        CHECK(p[k] == a[k] * p[k - 1] + p[k - 2]);
        // |p_k q_{k-1} - p_{k-1} q_k| = 1
        CHECK(abs(p[k] * q[k - 1] - p[k - 1] * q[k]) == 1);
    }
}

TEST_CASE("beta estimate singles out the giant coefficient") {
    // a = [0;1,3,55,2^319]: the last ratio log(q_4)/q_3 dwarfs the earlier ones
    std::vector<bigint> a{0, 1, 3, 55, bigint(1) << 319};
    FrequencyModel f = make_frequency(a);
    const auto rows = beta_estimate(f.cf);
    REQUIRE(!rows.empty());
    double at3 = 0;
    for (const auto& r : rows)
        if (r.k == 3) at3 = r.ratio;
    const double q3 = f.cf.convergent_denominators[3].convert_to<double>();
    const double logq4 = log_bigint(f.cf.convergent_denominators[4]);
    CHECK(at3 == doctest::Approx(logq4 / q3).epsilon(1e-12));
    CHECK(at3 > 0.9); // roughly 319 log 2 / 221
    double best = 0;
    for (const auto& r : rows) {
        best = std::max(best, r.ratio);
        CHECK(r.running_max == doctest::Approx(best).epsilon(1e-12));
    }
}

TEST_CASE("orbit error budget enforced") {
    FrequencyModel f = golden(40);
    CHECK(f.max_orbit_length() > 1000000);
    CHECK_THROWS_AS(orbit(0.5, f, f.max_orbit_length() + 1), precision_error);
    auto pts = orbit(0.25, f, 100);
    REQUIRE(pts.size() == 100);
    CHECK(pts[0] == doctest::Approx(0.25));
    for (double p : pts) {
        CHECK(p >= 0.0);
        CHECK(p < 1.0);
    }
    // step difference is alpha mod 1
    const double alpha = f.value();
    for (std::size_t j = 1; j < pts.size(); ++j) {
        double d = pts[j] - pts[j - 1];
        if (d < 0) d += 1.0;
        CHECK(d == doctest::Approx(alpha).epsilon(1e-12));
    }
}

TEST_CASE("orbit window covers negative shifts") {
    FrequencyModel f = golden(40);
    auto w = orbit_window(0.3, f, -5, 11);
    auto o = orbit(0.3, f, 6);
    REQUIRE(w.size() == 11);
    for (int j = 0; j <= 5; ++j)
        CHECK(w[std::size_t(5 + j)] == doctest::Approx(o[std::size_t(j)]).epsilon(1e-14));
}

TEST_CASE("exact torus norms match convergent quality") {
    FrequencyModel f = golden(40);
    const auto qs = f.denominators_i64();
    for (int k = 2; k <= 9; ++k) {
        const double norm = torus_norm_multiple(f, bigint(qs[std::size_t(k)]));
        // 1/(q_k + q_{k+1}) <= ||q_k alpha|| <= 1/q_{k+1}
        CHECK(norm <= 1.0 / double(qs[std::size_t(k + 1)]) + 1e-15);
        CHECK(norm >= 1.0 / double(qs[std::size_t(k)] + qs[std::size_t(k + 1)]) - 1e-15);
    }
}

TEST_CASE("three distance structure at golden scales") {
    FrequencyModel f = golden(40);
    for (int k = 3; k <= 12; ++k) {
        ThreeDistanceReport r = three_distance_check(f, k);
        INFO("k = ", k, " failure: ", r.failure);
        CHECK(r.pass);
        CHECK(r.gap_value_count <= 3);
        CHECK(r.gap_small > 0);
        CHECK(r.gap_large <= 2.0 / double(f.denominators_i64()[std::size_t(k)]));
    }
    CHECK_THROWS(three_distance_check(f, 0));
    CHECK_THROWS(three_distance_check(f, f.order()));
}

TEST_CASE("discrepancy of a two point set") {
    DiscrepancyReport r = discrepancy({0.25, 0.75});
    CHECK(r.value == doctest::Approx(0.25).epsilon(1e-12));
}

TEST_CASE("discrepancy of equally spaced points decays") {
    std::vector<double> pts;
    for (int i = 0; i < 1000; ++i) pts.push_back((i + 0.5) / 1000.0);
    DiscrepancyReport r = discrepancy(pts);
    CHECK(r.value <= 0.0011);
}

TEST_CASE("koksma bound for a quadratic test function") {
    FrequencyModel f = golden(40);
    auto pts = orbit(0.1, f, 987);
    KoksmaResult k = koksma_check([](double t) { return t * t; }, 2.0, pts);
    CHECK(k.integration_ok);
    CHECK(k.integral == doctest::Approx(1.0 / 3.0).epsilon(1e-9));
    CHECK(k.pass);
    CHECK(k.lhs <= k.rhs + 1e-12);
}

TEST_CASE("coefficient validation") {
    CHECK_THROWS(make_frequency(std::vector<std::int64_t>{0, 0, 3}));
    CHECK_THROWS(make_frequency(std::vector<std::int64_t>{-1, 2}));
}
