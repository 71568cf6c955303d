#include <algorithm>
#include <cmath>
#include <random>
#include <vector>

#include "doctest.h"
#include "monoloc/box_operator.hpp"
#include "monoloc/branches.hpp"
#include "monoloc/ldt.hpp"
#include "monoloc/spectral.hpp"

using namespace monoloc;

namespace {

FrequencyModel golden(int terms = 40) {
    std::vector<std::int64_t> a(std::size_t(terms) + 1, 1);
    a[0] = 0;
    return make_frequency(a);
}

IDSTable golden_ids(const FrequencyModel& f, const MonotonePotential& p) {
    return ids_build(f, p, 987, linear_grid(-1.0, p.sup_value() + 1.0, 1024));
}

} // namespace

TEST_CASE("scale choice picks the largest workable denominator") {
    FrequencyModel f = golden();
    // brute force over all convergents: the chosen q admits s >= 1, |r| <= sqrt n,
    // and no larger denominator does
    for (std::int64_t n : {30, 55, 100, 144, 200, 377, 500, 987, 1000}) {
        ScaleChoice c = choose_scale(n, f);
        CHECK(c.n == n);
        CHECK(c.s * c.q + c.r == n);
        CHECK(c.s >= 1);
        CHECK(std::llabs(c.r) * std::llabs(c.r) <= n);
        bool larger_works = false;
        for (std::int64_t q : f.denominators_i64()) {
            if (q <= c.q) continue;
            const std::int64_t s = (n + q / 2) / q;
            const std::int64_t r = n - s * q;
            if (s >= 1 && r * r <= n) larger_works = true;
        }
        CHECK(!larger_works);
    }
    ScaleChoice c100 = choose_scale(100, f);
    CHECK(c100.q == 55);
    CHECK(c100.s == 2);
    CHECK(c100.r == -10);
}

TEST_CASE("determinant split recombines to the full determinant") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    BoxOperator box = build_box(0.37, f, p, 0, 89);
    CutoffPair cut = make_cutoffs(1e-4, 89.0);
    const double E = 9.4;
    DeterminantSplit s = split_determinant(box, E, cut);
    CHECK(s.count_minus + s.count_mid + s.count_plus == 89);
    CHECK(s.residual_log <= 1e-8);
    SignedLog d = determinant(box, E);
    const double relg = s.p_minus.lg + s.p_mid.lg + s.p_plus.lg;
    CHECK(relg == doctest::Approx(d.lg).epsilon(1e-9));
    CHECK(s.p_minus.sign * s.p_mid.sign * s.p_plus.sign == d.sign);
}

TEST_CASE("ldt bounds hold at golden denominator scales") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable ids = golden_ids(f, p);
    for (std::int64_t n : {55, 89, 144}) {
        ScaleChoice sc = choose_scale(n, f);
        BoxOperator box = build_box(0.6180339887498949, f, p, 0, n);
        for (double frac : {0.25, 0.5, 0.75}) {
            const double E = ids.inverse_at(frac);
            LDTReport r = ldt_verify(box, E, sc, ids, p);
            INFO("n = ", n, " E = ", E, " note: ", r.note);
            CHECK(r.mid_vs_density.pass);
            CHECK(r.minus_count.pass);
            CHECK(r.plus_count.pass);
            CHECK(r.pass);
            UniformUpperReport uu = uniform_upper_check(box, E, sc, ids);
            CHECK(uu.pass);
        }
    }
}

TEST_CASE("far product is vacuous once the cutoff clears a bounded potential") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(5.0, 0.0); // range [0, 5], B_plus = q = 55 clears it
    IDSTable ids = ids_build(f, p, 987, linear_grid(-1.0, 6.0, 512));
    ScaleChoice sc = choose_scale(55, f);
    BoxOperator box = build_box(0.21, f, p, 0, 55);
    LDTReport r = ldt_verify(box, ids.inverse_at(0.5), sc, ids, p);
    CHECK(r.plus_vacuous);
    CHECK(r.plus_count.observed == 0);
}

TEST_CASE("lagrange bound against random monic polynomials") {
    // no monic degree-t polynomial can stay below (d/2)^t t! on all points
    std::mt19937_64 rng(12345);
    std::uniform_real_distribution<double> u(0.0, 1.0);
    for (int trial = 0; trial < 10000; ++trial) {
        const int t = 1 + int(rng() % 4);
        const int count = t + 1 + int(rng() % 3);
        std::vector<double> pts;
        for (int i = 0; i < count; ++i) pts.push_back(u(rng));
        std::sort(pts.begin(), pts.end());
        bool ok = true;
        for (std::size_t i = 1; i < pts.size(); ++i)
            if (pts[i] - pts[i - 1] < 1e-6) ok = false;
        if (!ok) continue;
        const double bound = lagrange_bound(pts, t);
        // random monic polynomial with roots in [0,1]
        std::vector<double> roots;
        for (int i = 0; i < t; ++i) roots.push_back(u(rng));
        double best = 0;
        for (double x : pts) {
            double v = 1;
            for (double r : roots) v *= (x - r);
            best = std::max(best, std::fabs(v));
        }
        CHECK(best >= bound * (1 - 1e-12));
    }
}

TEST_CASE("lagrange bound input validation") {
    CHECK_THROWS(lagrange_bound({0.1, 0.2}, -1));
    CHECK_THROWS(lagrange_bound({0.1, 0.2}, 2));       // needs t+1 points
    CHECK_THROWS(lagrange_bound({0.1, 0.1, 0.3}, 1)); // duplicates
}

TEST_CASE("regime classification on the golden frequency") {
    FrequencyModel f = golden();
    // golden is Diophantine at every scale: no Liouville k exists for C_d = 4
    ResonanceMap map = resonance_map(f, 8, 0.05, 4.0, 0.2);
    CHECK(!map.liouville);
    CHECK(map.q_k == 34);
    CHECK(map.b_k == 1);
    // the one-denominator construction covers the band around q_k only;
    // points outside it belong to other scales
    PointRegime band = map.classify(25);
    CHECK(band.kind == Regime::dio_base);
    CHECK(band.q_prime == 34);
    PointRegime near_origin = map.classify(1);
    CHECK(near_origin.kind == Regime::unclassified);
}

TEST_CASE("regime classification on an engineered liouville frequency") {
    // [0;1 x14, 2^31]: q_14 = 610, q_15 huge, so k = 14 is Liouville
    std::vector<bigint> a(16, 1);
    a[0] = 0;
    a[15] = bigint(1) << 31;
    FrequencyModel f = make_frequency(a, 512);
    ResonanceMap map = resonance_map(f, 14, 0.0125, 4.0, 0.2);
    CHECK(map.liouville);
    CHECK(map.q_k == 610);
    CHECK(map.b_k == 7);
    // near ell * q_k lands in the resonant zone
    PointRegime res = map.classify(2 * 610 + 3);
    CHECK(res.kind == Regime::resonant);
    CHECK(res.ell == 2);
    // midway between zones is nonresonant
    PointRegime non = map.classify(610 / 2);
    CHECK((non.kind == Regime::nonres_dio || non.kind == Regime::nonres_lio));
    // the zone around zero is excluded outright
    PointRegime org = map.classify(3);
    CHECK(org.kind == Regime::origin_zone);
}

TEST_CASE("sampling sets respect cardinality and separation by regime") {
    std::vector<bigint> a(16, 1);
    a[0] = 0;
    a[15] = bigint(1) << 31;
    FrequencyModel f = make_frequency(a, 512);
    ResonanceMap map = resonance_map(f, 14, 0.0125, 4.0, 0.2);

    PointRegime pr = map.classify(800);
    SamplingSet set = build_sampling_set(800, pr.kind, map);
    CHECK(set.J.size() >= 2);
    CHECK(std::is_sorted(set.J.begin(), set.J.end()));
    CHECK(set.observed_min_separation > 0);
    CHECK(set.n_det > 0);

    PointRegime res = map.classify(3 * 610 + 2);
    if (res.kind == Regime::resonant) {
        SamplingSet rset = build_sampling_set(res.m, res.kind, map);
        CHECK(rset.intra_pair_distance > 0);
        CHECK(!rset.clusters.empty());
    }
}

TEST_CASE("sampling lemma certifies a small denominator window") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    BranchTable table = branch_table(f, p, 55, 256);
    IDSTable ids = golden_ids(f, p);
    const double E = ids.inverse_at(0.5);
    IntersectionSet xs = intersection_points(table, E);
    // pick a genuine crossing in the bulk and a window around it
    double z = -1;
    for (const auto& pt : xs.points)
        if (pt.genuine && pt.z > 0.2 && pt.z < 0.8) z = pt.z;
    REQUIRE(z > 0);
    const double w = 0.002; // keeps |I| under 1/(10 gamma) = 0.005
    std::vector<double> phases;
    for (int i = -2; i <= 2; ++i) {
        const double cand = z + 0.0008 * i;
        bool clear = true;
        for (const auto& pt : xs.points)
            if (pt.genuine && std::fabs(cand - pt.z) < 1e-5) clear = false;
        if (clear) phases.push_back(cand);
    }
    REQUIRE(phases.size() >= 2);
    CutoffPair cut = make_cutoffs(1.0 / (55.0 * 55.0 * 55.0), 55.0);
    SamplingLemmaResult r =
        sampling_lemma_bound(z - w, z + w, phases, xs, 20.0, f, p, 55, E, cut);
    INFO("t = ", r.t, " bound_log = ", r.bound_log, " obs = ", r.observed_log_p_minus);
    CHECK(r.verified);
    CHECK(r.observed_log_p_minus >= r.bound_log - 1e-9);
}

TEST_CASE("sampling lemma rejects an oversized interval") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    BranchTable table = branch_table(f, p, 21, 128);
    IntersectionSet xs = intersection_points(table, 10.0);
    CutoffPair cut = make_cutoffs(1e-4, 21.0);
    CHECK_THROWS(sampling_lemma_bound(0.1, 0.2, {0.12, 0.15}, xs, 20.0, f, p, 21, 10.0, cut));
}

TEST_CASE("certify interval near the base point") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable ids = golden_ids(f, p);
    // an energy in a spectral gap of the local box decays on both sides
    const double E = ids.inverse_at(0.5);
    GoodInterval g = certify_interval(0.6180339887498949, f, p, 40, 150, E, 0.2);
    if (g.certified) {
        CHECK(g.mu > 0);
        CHECK(g.covered_lo >= g.n1);
        CHECK(g.covered_hi <= g.n2);
        CHECK(g.cert_left_worst <= 1e-9);
        CHECK(g.cert_right_worst <= 1e-9);
    }
}

TEST_CASE("find good interval covers diophantine points") {
    FrequencyModel f = golden();
    MonotonePotential p = make_sawtooth(20.0, 0.0);
    IDSTable ids = golden_ids(f, p);
    ResonanceMap map = resonance_map(f, 9, 0.05, 4.0, 0.2); // q_9 = 55
    const double E = ids.inverse_at(0.5);
    int found = 0, tried = 0;
    // the q = 55 construction serves the band between 55/2 and 89 - 55/2
    for (std::int64_t m : {29, 33, 40, 52, 61}) {
        PointRegime pr = map.classify(m);
        if (pr.kind == Regime::origin_zone || pr.kind == Regime::resonant) continue;
        ++tried;
        GoodIntervalSearch gs = find_good_interval(0.6180339887498949, m, E, pr, map, ids, p);
        INFO("m = ", m, " failure: ", gs.failure);
        if (gs.found) {
            ++found;
            CHECK(gs.interval.certified);
            CHECK(gs.interval.covered_lo <= m);
            CHECK(gs.interval.covered_hi >= m);
            CHECK(gs.interval.mu > 0);
        }
    }
    CHECK(tried >= 3);
    CHECK(found >= tried / 2 + 1);
}
