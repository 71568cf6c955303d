#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <vector>

#include "doctest.h"
#include "monoloc/box_operator.hpp"
#include "monoloc/branches.hpp"

using namespace monoloc;

namespace {

FrequencyModel golden() {
    std::vector<std::int64_t> a(41, 1);
    a[0] = 0;
    return make_frequency(a);
}

} // namespace

TEST_CASE("jump points are the backward orbit of zero") {
    FrequencyModel f = golden();
    JumpPoints jp = jump_points(f, 8);
    REQUIRE(jp.values.size() == 8);
    CHECK(jp.values[0] == 0.0);
    CHECK(std::is_sorted(jp.values.begin(), jp.values.end()));
    const double alpha = f.value();
    // every value is {-j alpha} for some j < 8
    for (double v : jp.values) {
        bool hit = false;
        for (int j = 0; j < 8; ++j) {
            double t = std::fmod(1.0 - std::fmod(j * alpha, 1.0), 1.0);
            if (std::fabs(t - v) < 1e-9) hit = true;
        }
        CHECK(hit);
    }
    CHECK(jp.min_gap() > 0);
    // interval_index brackets correctly
    for (int i = 0; i < 8; ++i) {
        double mid = jp.values[std::size_t(i)] +
                     0.5 * ((i + 1 < 8 ? jp.values[std::size_t(i + 1)] : 1.0) -
                            jp.values[std::size_t(i)]);
        CHECK(jp.interval_index(mid) == i);
    }
}

TEST_CASE("branches are gamma monotone and reproduce the spectrum") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    BranchTable t = branch_table(f, p, 13, 256);
    BranchCheck c = branch_check(t);
    INFO(c.note);
    CHECK(c.pass);
    CHECK(c.worst_slope_defect >= -1e-6);
    CHECK(c.worst_multiset_gap <= 1e-8);
}

TEST_CASE("branch eval agrees with the sampled grid") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(10.0, 0.4);
    BranchTable t = branch_table(f, p, 8, 64);
    for (int k : {0, 3, 7})
        for (int g : {0, 17, 40, 63}) {
            const double u = t.grid[std::size_t(g)];
            CHECK(t.eval(k, u) ==
                  doctest::Approx(t.samples[std::size_t(k)][std::size_t(g)]).epsilon(1e-9));
        }
}

TEST_CASE("rank one interlacing across jumps") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(15.0, 0.0);
    RankOneReport r = check_rank_one(f, p, 13, 128);
    CHECK(r.pass);
}

TEST_CASE("intersection points split the phase circle at a bulk energy") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    BranchTable t = branch_table(f, p, 13, 256);
    // mid-range energy: some branches cross, and each genuine crossing z
    // satisfies branch(z) = E to bisection accuracy
    const double E = 10.0;
    IntersectionSet s = intersection_points(t, E);
    REQUIRE(int(s.points.size()) == 13);
    int genuine = 0;
    for (const auto& pt : s.points) {
        CHECK(pt.z >= 0.0);
        CHECK(pt.z <= 1.0);
        if (pt.genuine) {
            ++genuine;
            // z is the absolute phase; the branch argument undoes the shift
            double u = pt.z - t.shifts[std::size_t(pt.branch)];
            u -= std::floor(u);
            CHECK(t.eval(pt.branch, u) == doctest::Approx(E).epsilon(1e-6));
        }
    }
    CHECK(genuine >= 1);
    CHECK(std::is_sorted(s.points.begin(), s.points.end(),
                         [](const auto& a, const auto& b) { return a.z < b.z; }));
}

TEST_CASE("counting variation at a denominator scale") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    VariationReport v = counting_variation(f, p, 21, 9.0, 256);
    CHECK(v.pass);
    CHECK(v.observed_max <= 16);
    CHECK(v.observed_max >= 0);
}

TEST_CASE("counting variation at composite scales uses the s r budget") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    VariationReport v = counting_variation_general(f, p, 44, 21, 9.0, 256);
    // 44 = 2*21 + 2
    CHECK(v.s == 2);
    CHECK(v.r == 2);
    CHECK(v.bound == doctest::Approx(64.0 * 2 + 16.0 * (2 + 2)));
    CHECK(v.pass);
}

TEST_CASE("intersection counts in a window respect the cluster bound") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    BranchTable t = branch_table(f, p, 55, 512);
    IntersectionCountReport r =
        intersection_count_bound(t, 55, 10.0, 0.2, 0.45, 1e-6);
    CHECK(r.pass);
    CHECK(r.neighborhood_pass);
    CHECK(r.count <= r.bound);
}
