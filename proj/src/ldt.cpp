#include "monoloc/ldt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <limits>
#include <sstream>
#include <stdexcept>

#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "monoloc/parallel.hpp"

namespace monoloc {

namespace {

const double kInf = std::numeric_limits<double>::infinity();

// exact fractional position of j*alpha, alpha = p_K/q_K
double orbit_position(const FrequencyModel& freq, const bigint& j) {
    const bigint& p = freq.cf.convergent_numerators.back();
    const bigint& q = freq.cf.convergent_denominators.back();
    bigint r = (j * p) % q;
    if (r < 0) r += q;
    return r.convert_to<double>() / q.convert_to<double>();
}

// numerator of ||j alpha|| over the common denominator q_K
bigint norm_numerator(const FrequencyModel& freq, const bigint& j) {
    const bigint& p = freq.cf.convergent_numerators.back();
    const bigint& q = freq.cf.convergent_denominators.back();
    bigint r = (j * p) % q;
    if (r < 0) r += q;
    return r <= q - r ? r : q - r;
}

// ||diff alpha|| >= 1/c_den, decided in integers
bool separation_at_least(const FrequencyModel& freq, const bigint& diff, const bigint& c_den) {
    const bigint& q = freq.cf.convergent_denominators.back();
    return norm_numerator(freq, diff) * c_den >= q;
}

double to_double_clamped(const bigint& v) {
    double d = v.convert_to<double>();
    return std::isfinite(d) ? d : 1e300;
}

double potential_log_moment(const MonotonePotential& pot, double E) {
    auto f = [&](double x) {
        double v = pot.evaluate(x);
        if (!std::isfinite(v)) return 0.0; // measure-zero endpoint
        return std::log(std::fabs(v - E) + 2.0);
    };
    namespace bq = boost::math::quadrature;
    return bq::gauss_kronrod<double, 61>::integrate(f, 0.0, 1.0, 12, 1e-10);
}

// split the circle of orbit positions at the `num` widest gaps; returns the
// clusters in circular walk order and, optionally, the member shifts
std::vector<SamplingCluster> detect_clusters(const FrequencyModel& freq,
                                             const std::vector<std::int64_t>& J, int num,
                                             std::vector<std::vector<std::int64_t>>* members,
                                             std::vector<double>* split_gaps) {
    size_t N = J.size();
    if (num < 1 || (size_t)num > N) throw std::invalid_argument("bad cluster count");
    std::vector<std::pair<double, std::int64_t>> pos(N);
    for (size_t i = 0; i < N; ++i) pos[i] = {orbit_position(freq, bigint(J[i])), J[i]};
    std::sort(pos.begin(), pos.end());
    std::vector<std::pair<double, size_t>> gaps(N); // gap following sorted index i
    for (size_t i = 0; i + 1 < N; ++i) gaps[i] = {pos[i + 1].first - pos[i].first, i};
    gaps[N - 1] = {pos[0].first + 1.0 - pos[N - 1].first, N - 1};
    std::vector<std::pair<double, size_t>> ranked = gaps;
    std::sort(ranked.begin(), ranked.end(),
              [](const auto& a, const auto& b) { return a.first > b.first; });
    std::vector<char> is_split(N, 0);
    for (int g = 0; g < num; ++g) is_split[ranked[(size_t)g].second] = 1;
    size_t start = (ranked[0].second + 1) % N;

    std::vector<SamplingCluster> out;
    std::vector<double> unwrapped_lo, unwrapped_hi;
    std::vector<std::int64_t> cur;
    double lo = 0, hi = 0;
    for (size_t t = 0; t < N; ++t) {
        size_t idx = (start + t) % N;
        double p = pos[idx].first + (idx < start ? 1.0 : 0.0);
        if (cur.empty()) lo = p;
        hi = p;
        cur.push_back(pos[idx].second);
        if (is_split[idx]) {
            double nlo = lo >= 1.0 ? lo - 1.0 : lo;
            out.push_back({nlo, nlo + (hi - lo), (int)cur.size()});
            unwrapped_lo.push_back(lo);
            unwrapped_hi.push_back(hi);
            if (members) members->push_back(cur);
            cur.clear();
        }
    }
    if (split_gaps) {
        for (size_t i = 0; i < out.size(); ++i) {
            double next_lo =
                i + 1 < out.size() ? unwrapped_lo[i + 1] : unwrapped_lo[0] + 1.0;
            split_gaps->push_back(next_lo - unwrapped_hi[i]);
        }
    }
    return out;
}

} // namespace

ScaleChoice choose_scale(std::int64_t n, const FrequencyModel& freq) {
    if (n < 1) throw std::invalid_argument("scale length must be >= 1");
    ScaleChoice best{n, 0, 0, 0};
    auto consider = [&](std::int64_t q, std::int64_t s) {
        if (s < 1) return;
        std::int64_t r = n - s * q;
        if (r * r > n) return;
        std::int64_t ar = r < 0 ? -r : r;
        std::int64_t br = best.r < 0 ? -best.r : best.r;
        bool take;
        if (best.q == 0) take = true;
        else if (q != best.q) take = q > best.q;
        else if (ar != br) take = ar < br;
        else take = r > best.r;
        if (take) best = {n, q, s, r};
    };
    for (std::int64_t q : freq.denominators_i64()) {
        if (q > n && (q - n) * (q - n) > n) break; // even s = 1 overshoots
        consider(q, n / q);
        consider(q, n / q + 1);
    }
    return best;
}

CutoffPair cutoffs_for_scale(const ScaleChoice& scale, double C_d) {
    if (!(C_d > 1.0)) throw std::invalid_argument("C_d must exceed 1");
    double q = (double)scale.q;
    return make_cutoffs(std::pow(q, -(2.0 * C_d - 1.0)), q);
}

DeterminantSplit split_determinant(const BoxOperator& box, double E, const CutoffPair& cutoffs) {
    DeterminantSplit sp;
    sp.cutoffs = cutoffs;
    EigenData ed = eigenvalues(box);
    for (double lam : ed.eigenvalues) {
        if (!std::isfinite(lam)) continue; // Dirichlet deltas carry no factor
        double u = std::fabs(lam - E);
        SignedLog f = SignedLog::from(lam - E);
        if (u < cutoffs.B_minus) {
            sp.p_minus *= f;
            ++sp.count_minus;
        } else if (u <= cutoffs.B_plus) {
            sp.p_mid *= f;
            ++sp.count_mid;
        } else {
            sp.p_plus *= f;
            ++sp.count_plus;
        }
    }
    SignedLog det = determinant(box, E);
    SignedLog prod = sp.p_minus * sp.p_mid * sp.p_plus;
    if (det.sign == 0 && prod.sign == 0) sp.residual_log = 0;
    else if (det.sign == prod.sign) sp.residual_log = std::fabs(det.lg - prod.lg);
    else sp.residual_log = kInf;
    return sp;
}

LDTReport ldt_verify(const BoxOperator& box, double E, const ScaleChoice& scale,
                     const IDSTable& ids, const MonotonePotential& pot, double C_d) {
    if (box.n != scale.n)
        throw std::invalid_argument("box length disagrees with the scale choice");
    LDTReport rep;
    rep.scale = scale;
    rep.C_d = C_d;
    rep.cutoffs = cutoffs_for_scale(scale, C_d);
    rep.split = split_determinant(box, E, rep.cutoffs);

    double n = (double)scale.n, s = (double)scale.s, q = (double)scale.q;
    double ar = (double)(scale.r < 0 ? -scale.r : scale.r);
    double logratio = std::log(rep.cutoffs.B_plus / rep.cutoffs.B_minus);

    rep.mid_vs_density.observed =
        std::fabs(rep.split.p_mid.lg / n - thouless_banded(ids, E, rep.cutoffs));
    rep.mid_vs_density.bound = 300.0 * ((s + ar) / n) * logratio;
    rep.mid_vs_density.pass = rep.mid_vs_density.observed <= rep.mid_vs_density.bound + 1e-12;

    rep.minus_count.observed = rep.split.count_minus;
    rep.minus_count.bound =
        2.0 * s * q * rep.cutoffs.B_minus / pot.gamma + 100.0 * (s + ar) + 20.0;
    rep.minus_count.pass = rep.minus_count.observed <= rep.minus_count.bound;

    rep.plus_count.observed = rep.split.count_plus;
    rep.plus_count.bound =
        4.0 * (s + ar) + n / std::log(rep.cutoffs.B_plus) * potential_log_moment(pot, E);
    rep.plus_count.pass = rep.plus_count.observed <= rep.plus_count.bound;

    double flo = pot.inf_value(), fhi = pot.sup_value();
    if (std::isfinite(flo) && std::isfinite(fhi)) {
        double maxdev = std::max(std::fabs(fhi - E), std::fabs(flo - E));
        rep.plus_vacuous = rep.cutoffs.B_plus > maxdev + 2.0;
    }

    // eigenvalue-diagonal sandwich, finite sites only
    double lower = 0, upper = 0;
    int cl = 0, cu = 0;
    for (std::int64_t i = 0; i < box.n; ++i) {
        double dg = box.diagonal[(size_t)i];
        if (!std::isfinite(dg)) continue;
        double u = std::fabs(dg - E);
        if (u > rep.cutoffs.B_plus + 2.0) {
            lower += std::log(u - 2.0);
            ++cl;
        }
        if (u > rep.cutoffs.B_plus - 2.0) {
            upper += std::log(u + 2.0);
            ++cu;
        }
    }
    rep.plus_log_lower = lower;
    rep.plus_log_upper = upper;
    rep.plus_diag_lower_count = cl;
    rep.plus_diag_upper_count = cu;
    double plg = rep.split.p_plus.lg;
    double tol = 1e-9 * (1.0 + std::fabs(plg));
    rep.plus_sandwich_pass = lower <= plg + tol && plg <= upper + tol;
    rep.plus_count_sandwich_pass =
        cl <= rep.split.count_plus && rep.split.count_plus <= cu;

    rep.pass = rep.mid_vs_density.pass && rep.minus_count.pass && rep.plus_count.pass &&
               rep.plus_sandwich_pass && rep.plus_count_sandwich_pass;
    if (rep.plus_vacuous) rep.note = "plus cutoff exceeds the potential range: far checks vacuous";
    return rep;
}

UniformUpperReport uniform_upper_check(const BoxOperator& box, double E,
                                       const ScaleChoice& scale, const IDSTable& ids,
                                       double C_d) {
    UniformUpperReport rep;
    CutoffPair cut = cutoffs_for_scale(scale, C_d);
    DeterminantSplit sp = split_determinant(box, E, cut);
    rep.observed_log = sp.p_minus.lg + sp.p_mid.lg;
    rep.L = thouless(ids, E);
    rep.L_corr = l_corr(ids, E, cut);
    double n = (double)scale.n, q = (double)scale.q;
    double ar = (double)(scale.r < 0 ? -scale.r : scale.r);
    rep.bound = n * rep.L *
                (1.0 + rep.L_corr + 300.0 * (1.0 / q + ar / n) * std::log(cut.B_plus / cut.B_minus));
    rep.pass = rep.observed_log <= rep.bound + 1e-9 * (1.0 + std::fabs(rep.bound));
    return rep;
}

double lagrange_bound(const std::vector<double>& points, int degree) {
    if (degree < 0) throw std::invalid_argument("degree must be >= 0");
    if ((int)points.size() < degree + 1)
        throw std::invalid_argument("need at least degree+1 points");
    std::vector<double> p = points;
    std::sort(p.begin(), p.end());
    double d = kInf;
    for (size_t i = 0; i + 1 < p.size(); ++i) d = std::min(d, p[i + 1] - p[i]);
    if (degree > 0 && !(d > 0))
        throw std::invalid_argument("separation violation: duplicate points");
    double b = 1.0;
    for (int i = 1; i <= degree; ++i) b *= 0.5 * d * (double)i;
    return b;
}

SamplingLemmaResult sampling_lemma_bound(double I_lo, double I_hi,
                                         const std::vector<double>& sampling_phases,
                                         const IntersectionSet& intersections, double gamma,
                                         const FrequencyModel& freq,
                                         const MonotonePotential& pot, std::int64_t n,
                                         double E, const CutoffPair& cutoffs) {
    if (!(I_hi > I_lo)) throw std::invalid_argument("empty sampling interval");
    if (!(gamma > 0)) throw std::invalid_argument("gamma must be positive");
    double len = I_hi - I_lo;
    if (!(len < 1.0 / (10.0 * gamma))) {
        std::ostringstream os;
        os << "sampling interval too long: |I| = " << len << " not below 1/(10 gamma) = "
           << 1.0 / (10.0 * gamma);
        throw std::invalid_argument(os.str());
    }
    if (sampling_phases.empty()) throw std::invalid_argument("no sampling points");
    std::vector<double> pts = sampling_phases;
    std::sort(pts.begin(), pts.end());
    for (double xp : pts)
        if (xp < I_lo - 1e-15 || xp > I_hi + 1e-15)
            throw std::invalid_argument("sampling point outside the interval");
    double d = kInf;
    for (size_t i = 0; i + 1 < pts.size(); ++i) d = std::min(d, pts[i + 1] - pts[i]);
    if (pts.size() >= 2 && !(d > 0))
        throw std::invalid_argument("sampling points too close: zero separation");

    int t = 0;
    for (const auto& ip : intersections.points) {
        if (!ip.genuine) continue;
        if (ip.z >= I_lo && ip.z <= I_hi) {
            ++t;
            continue;
        }
        double clearance = std::min(torus_distance(ip.z - I_lo), torus_distance(ip.z - I_hi));
        if (clearance < cutoffs.B_minus / gamma) {
            std::ostringstream os;
            os << "intersection point at z = " << ip.z << " within B_minus/gamma = "
               << cutoffs.B_minus / gamma << " of the interval";
            throw std::invalid_argument(os.str());
        }
    }
    if ((int)pts.size() < t + 1) {
        std::ostringstream os;
        os << "need at least " << t + 1 << " sampling points for " << t
           << " intersection points";
        throw std::invalid_argument(os.str());
    }

    SamplingLemmaResult res;
    res.t = t;
    res.d = d;
    res.bound_log = 0;
    for (int i = 1; i <= t; ++i) res.bound_log += std::log(gamma * 0.5 * d * (double)i);
    res.per_point_log_p_minus.assign(pts.size(), 0.0);
    par::for_index((std::int64_t)pts.size(), [&](std::int64_t i) {
        BoxOperator box = build_box(pts[(size_t)i], freq, pot, 0, n);
        DeterminantSplit sp = split_determinant(box, E, cutoffs);
        res.per_point_log_p_minus[(size_t)i] = sp.p_minus.lg;
    });
    size_t best = 0;
    for (size_t i = 1; i < pts.size(); ++i)
        if (res.per_point_log_p_minus[i] > res.per_point_log_p_minus[best]) best = i;
    res.chosen_point = pts[best];
    res.observed_log_p_minus = res.per_point_log_p_minus[best];
    res.verified = res.observed_log_p_minus >= res.bound_log - 1e-9;
    return res;
}

const char* regime_name(Regime r) {
    switch (r) {
    case Regime::dio_base: return "dio_base";
    case Regime::dio_dio: return "dio_dio";
    case Regime::lio_dio: return "lio_dio";
    case Regime::nonres_dio: return "nonres_dio";
    case Regime::nonres_lio: return "nonres_lio";
    case Regime::resonant: return "resonant";
    case Regime::origin_zone: return "origin_zone";
    default: return "unclassified";
    }
}

ResonanceMap resonance_map(const FrequencyModel& freq, int k, double tau, double C_d,
                           double sigma) {
    if (!(tau > 0.0 && tau < 0.125)) throw std::invalid_argument("tau must lie in (0, 1/8)");
    if (!(sigma > 0.0 && sigma < 0.5)) throw std::invalid_argument("sigma must lie in (0, 1/2)");
    if (!(C_d > 1.0)) throw std::invalid_argument("C_d must exceed 1");
    if (k < 1 || k + 1 > freq.order())
        throw std::invalid_argument("k must satisfy 1 <= k <= order-1");

    ResonanceMap map;
    map.k = k;
    map.tau = tau;
    map.sigma = sigma;
    map.C_d = C_d;
    map.freq = freq;
    const bigint& qk_big = freq.cf.convergent_denominators[(size_t)k];
    if (qk_big > bigint(std::numeric_limits<std::int64_t>::max() / 8))
        throw std::invalid_argument("q_k too large for lattice coordinates");
    map.q_k = qk_big.convert_to<std::int64_t>();
    map.q_k1 = freq.cf.convergent_denominators[(size_t)k + 1];
    map.q_k1_log = log_bigint(map.q_k1);
    map.beta_k = map.q_k1_log / (double)map.q_k;
    map.b_k = (std::int64_t)std::floor(tau * (double)map.q_k);
    if (2 * map.b_k >= map.q_k)
        throw std::invalid_argument("tau too large: resonance zones overlap");
    // tiny denominators make the comparison vacuous (log q_k near zero), and
    // every other stage assumes scales above 10 anyway
    map.liouville = map.q_k > 10 && map.q_k1_log > C_d * std::log((double)map.q_k);
    bigint em = map.q_k1 / (10 * bigint(map.q_k));
    map.ell_max = em > bigint(std::numeric_limits<std::int64_t>::max())
                      ? std::numeric_limits<std::int64_t>::max()
                      : em.convert_to<std::int64_t>();
    for (std::int64_t l = 1; l <= std::min<std::int64_t>(map.ell_max, 64); ++l) {
        map.zones.push_back({l, l * map.q_k - map.b_k, l * map.q_k + map.b_k});
        map.zones.push_back({-l, -l * map.q_k - map.b_k, -l * map.q_k + map.b_k});
    }
    std::sort(map.zones.begin(), map.zones.end(),
              [](const ResonanceZone& a, const ResonanceZone& b) { return a.lo < b.lo; });

    double target = tau * (double)map.q_k;
    int best_idx = -1;
    for (int i = 0; i <= k; ++i) {
        double qi = to_double_clamped(freq.cf.convergent_denominators[(size_t)i]);
        if (2.0 * qi <= target) best_idx = i;
    }
    if (best_idx >= 0) {
        map.global_valid = true;
        map.global_k0 = k - best_idx;
        map.global_q_prime =
            freq.cf.convergent_denominators[(size_t)best_idx].convert_to<std::int64_t>();
        map.global_s = (std::int64_t)std::floor(target / (2.0 * (double)map.global_q_prime));
        map.global_s_prime = map.global_s / 10;
    }
    return map;
}

bool ResonanceMap::resonant(std::int64_t m) const {
    if (!liouville) return false;
    std::int64_t ell = m >= 0 ? (m + q_k / 2) / q_k : -((-m + q_k / 2) / q_k);
    std::int64_t dist = std::llabs(m - ell * q_k);
    return dist <= b_k && ell != 0 && std::llabs(ell) <= ell_max;
}

PointRegime ResonanceMap::classify(std::int64_t m) const {
    PointRegime pr;
    pr.m = m;
    std::int64_t ell = m >= 0 ? (m + q_k / 2) / q_k : -((-m + q_k / 2) / q_k);
    std::int64_t dist = std::llabs(m - ell * q_k);
    pr.dist = dist;
    std::int64_t am = std::llabs(m);

    if (liouville && dist <= b_k) {
        pr.ell = ell;
        if (ell == 0) {
            pr.kind = Regime::origin_zone;
            pr.note = "inside the excluded zone around the origin";
        } else if (std::llabs(ell) <= ell_max) {
            pr.kind = Regime::resonant;
        } else {
            pr.kind = Regime::unclassified;
            pr.note = "zone index exceeds q_{k+1}/(10 q_k)";
        }
        return pr;
    }

    if (liouville) {
        if (global_valid && 100.0 * tau * (double)q_k < (double)am &&
            (double)am < 1.5 * (double)q_k) {
            pr.q_prime = global_q_prime;
            pr.s = global_s;
            pr.s_prime = global_s_prime;
            bool dio = std::log((double)global_s) <=
                       C_d * std::log((double)global_q_prime) + 1e-9;
            pr.kind = dio ? Regime::dio_dio : Regime::lio_dio;
            return pr;
        }
    } else {
        if ((double)am > (double)q_k / 2.0 + 1.0 && bigint(am) + q_k / 2 < q_k1) {
            pr.kind = Regime::dio_base;
            pr.q_prime = q_k;
            pr.s = 1;
            return pr;
        }
    }

    if (bigint(am) * 10 > q_k1) {
        pr.kind = Regime::unclassified;
        pr.note = "beyond q_{k+1}/10";
        return pr;
    }
    std::int64_t qp = 0;
    for (int i = 0; i <= k; ++i) {
        const bigint& qi = freq.cf.convergent_denominators[(size_t)i];
        if (2 * qi <= bigint(dist)) qp = qi.convert_to<std::int64_t>();
    }
    if (qp == 0) {
        pr.kind = Regime::unclassified;
        pr.note = "too close to a multiple of q_k for a per-point scale";
        return pr;
    }
    pr.q_prime = qp;
    pr.s = dist / (2 * qp);
    pr.s_prime = pr.s / 10;
    bool dio = std::log((double)pr.s) <= C_d * std::log((double)qp) + 1e-9;
    pr.kind = dio ? Regime::nonres_dio : Regime::nonres_lio;
    return pr;
}

SamplingSet build_sampling_set(std::int64_t m, Regime regime, const ResonanceMap& map) {
    PointRegime pr = map.classify(m);
    if (pr.kind != regime) {
        std::ostringstream os;
        os << "m = " << m << " is outside the validity window for " << regime_name(regime)
           << " (classified as " << regime_name(pr.kind)
           << (pr.note.empty() ? std::string() : ": " + pr.note) << ")";
        throw std::invalid_argument(os.str());
    }
    SamplingSet set;
    set.regime = regime;
    const std::int64_t qk = map.q_k;
    const FrequencyModel& freq = map.freq;
    auto push_range = [&](std::int64_t lo, std::int64_t hi, std::int64_t shift) {
        for (std::int64_t j = lo; j <= hi; ++j) set.J.push_back(j + shift);
    };

    std::int64_t mult = 0, L1 = 0;
    switch (regime) {
    case Regime::dio_base: {
        std::int64_t c = (std::int64_t)std::floor(2.0 * map.sigma * (double)qk);
        std::int64_t h = qk / 2;
        if (qk % 2 == 0) {
            push_range(-h, -1, -c);
        } else {
            push_range(-h - 1, -1, -c); // odd length: one copy takes the extra point
        }
        push_range(-h, 0, -c + m);
        set.n_det = qk;
        break;
    }
    case Regime::dio_dio:
    case Regime::lio_dio: {
        mult = regime == Regime::dio_dio ? pr.s : std::max<std::int64_t>(1, pr.s_prime);
        if (regime == Regime::lio_dio && pr.s_prime < 1)
            set.note = "s' clamped to 1 at this scale";
        L1 = mult * pr.q_prime;
        std::int64_t c = L1 / 2;
        push_range(-L1, -1, -c);
        push_range(-L1, -1, -c + m);
        set.n_det = 2 * L1 - 1;
        break;
    }
    case Regime::nonres_dio:
    case Regime::nonres_lio: {
        mult = regime == Regime::nonres_dio ? pr.s : std::max<std::int64_t>(1, pr.s_prime);
        if (regime == Regime::nonres_lio && pr.s_prime < 1)
            set.note = "s' clamped to 1 at this scale";
        L1 = mult * pr.q_prime;
        std::int64_t base = -(L1 / 2) - L1;
        push_range(0, L1 - 1, base);
        push_range(0, L1 - 1, base + m);
        set.n_det = 2 * L1 - 1;
        break;
    }
    case Regime::resonant: {
        std::int64_t base = -(3 * qk / 2);
        push_range(0, qk - 1, base);
        push_range(0, qk - 1, base + pr.ell * qk);
        set.n_det = 2 * qk - 1;
        break;
    }
    default: {
        std::ostringstream os;
        os << "no sampling construction for regime " << regime_name(regime);
        throw std::invalid_argument(os.str());
    }
    }

    std::sort(set.J.begin(), set.J.end());
    for (size_t i = 0; i + 1 < set.J.size(); ++i)
        if (set.J[i] == set.J[i + 1]) throw std::logic_error("sampling shifts collide");

    auto check_all_pairs = [&](const bigint& c_den, const char* what) {
        for (size_t a = 0; a < set.J.size(); ++a)
            for (size_t b = a + 1; b < set.J.size(); ++b)
                if (!separation_at_least(freq, bigint(set.J[b] - set.J[a]), c_den)) {
                    std::ostringstream os;
                    os << "sampling separation failure (" << what << "): shifts " << set.J[a]
                       << " and " << set.J[b];
                    throw std::domain_error(os.str());
                }
    };
    double obs = kInf;
    for (size_t a = 0; a < set.J.size(); ++a)
        for (size_t b = a + 1; b < set.J.size(); ++b)
            obs = std::min(obs, torus_norm_multiple(freq, bigint(set.J[b] - set.J[a])));
    set.observed_min_separation = obs;

    double qk1d = to_double_clamped(map.q_k1);
    switch (regime) {
    case Regime::dio_base:
    case Regime::dio_dio: {
        set.expected_separation = 0.5 / qk1d;
        check_all_pairs(2 * map.q_k1, "1/(2 q_{k+1})");
        set.t_for_bound = 0;
        set.d_for_bound = set.expected_separation;
        break;
    }
    case Regime::lio_dio: {
        set.expected_separation = 0.5 / (double)qk;
        std::vector<std::vector<std::int64_t>> members;
        std::vector<double> gaps;
        set.clusters = detect_clusters(freq, set.J, (int)pr.q_prime, &members, &gaps);
        double span_max = 13.0 / (18.0 * (double)pr.q_prime) + 1e-12;
        double gap_min = 5.0 / (18.0 * (double)pr.q_prime) - 1e-12;
        for (size_t i = 0; i < set.clusters.size(); ++i) {
            const SamplingCluster& cl = set.clusters[i];
            if (cl.count != (int)(2 * mult)) {
                std::ostringstream os;
                os << "cluster " << i << " holds " << cl.count << " points, expected "
                   << 2 * mult;
                throw std::domain_error(os.str());
            }
            if (cl.hi - cl.lo > span_max) {
                std::ostringstream os;
                os << "cluster " << i << " span " << cl.hi - cl.lo << " exceeds "
                   << span_max;
                throw std::domain_error(os.str());
            }
            for (size_t a = 0; a < members[i].size(); ++a)
                for (size_t b = a + 1; b < members[i].size(); ++b)
                    if (!separation_at_least(freq, bigint(members[i][b] - members[i][a]),
                                             bigint(2 * qk))) {
                        std::ostringstream os;
                        os << "sampling separation failure (1/(2 q_k) inside cluster " << i
                           << "): shifts " << members[i][a] << " and " << members[i][b];
                        throw std::domain_error(os.str());
                    }
        }
        for (double g : gaps)
            if (g < gap_min) {
                std::ostringstream os;
                os << "inter-cluster gap " << g << " below " << gap_min;
                throw std::domain_error(os.str());
            }
        set.t_for_bound = (int)(2 * mult - 1);
        set.d_for_bound = set.expected_separation;
        break;
    }
    case Regime::nonres_dio:
    case Regime::nonres_lio: {
        set.expected_separation = 1.0 / (3.0 * (double)qk);
        check_all_pairs(bigint(3 * qk), "1/(3 q_k)");
        if (regime == Regime::nonres_lio) {
            std::vector<std::vector<std::int64_t>> members;
            set.clusters = detect_clusters(freq, set.J, (int)pr.q_prime, &members, nullptr);
            set.t_for_bound = (int)(2 * mult - 1);
        } else {
            set.t_for_bound = 0;
        }
        set.d_for_bound = set.expected_separation;
        break;
    }
    case Regime::resonant: {
        set.intra_pair_distance = torus_norm_multiple(freq, bigint(pr.ell) * qk);
        set.expected_separation = std::min(set.intra_pair_distance, 1.0 / (3.0 * (double)qk));
        check_all_pairs(2 * map.q_k1, "1/(2 q_{k+1})");
        std::vector<std::vector<std::int64_t>> members;
        std::vector<double> gaps;
        set.clusters = detect_clusters(freq, set.J, (int)qk, &members, &gaps);
        double span_max = 2.0 / (9.0 * (double)qk) + 1e-12;
        std::int64_t lq = pr.ell * qk;
        for (size_t i = 0; i < set.clusters.size(); ++i) {
            const SamplingCluster& cl = set.clusters[i];
            if (cl.count != 2) {
                std::ostringstream os;
                os << "sampling pair " << i << " holds " << cl.count << " points";
                throw std::domain_error(os.str());
            }
            std::int64_t diff = members[i][1] - members[i][0];
            if (diff != lq && diff != -lq) {
                std::ostringstream os;
                os << "pair " << i << " spans " << diff << ", expected +-" << lq;
                throw std::domain_error(os.str());
            }
            if (cl.hi - cl.lo > span_max) {
                std::ostringstream os;
                os << "pair " << i << " span " << cl.hi - cl.lo << " exceeds " << span_max;
                throw std::domain_error(os.str());
            }
        }
        double gap_min = 1.0 / (3.0 * (double)qk) - 1e-12;
        for (double g : gaps)
            if (g < gap_min) {
                std::ostringstream os;
                os << "inter-pair gap " << g << " below " << gap_min;
                throw std::domain_error(os.str());
            }
        set.t_for_bound = 1;
        set.d_for_bound = set.intra_pair_distance;
        break;
    }
    default: break;
    }
    return set;
}

GoodInterval certify_interval(double x, const FrequencyModel& freq,
                              const MonotonePotential& pot, std::int64_t n1, std::int64_t n2,
                              double E, double sigma) {
    if (n2 < n1) throw std::invalid_argument("empty window");
    std::int64_t n = n2 - n1 + 1;
    std::int64_t margin = (std::int64_t)std::ceil(sigma * (double)n);
    GoodInterval gi;
    gi.n1 = n1;
    gi.n2 = n2;
    gi.sigma = sigma;
    if (margin < 1 || 2 * margin > n - 1)
        throw std::invalid_argument("window too short for the interior margin");
    gi.covered_lo = n1 + margin;
    gi.covered_hi = n2 - margin;

    BoxOperator box = build_box(x, freq, pot, n1, n);
    std::int64_t count = gi.covered_hi - gi.covered_lo + 1;
    std::vector<double> lg_left((size_t)count), lg_right((size_t)count);
    bool ok = true;
    double mu = kInf;
    try {
        for (std::int64_t i = 0; i < count; ++i) {
            int c = (int)(gi.covered_lo - n1 + i);
            SignedLog g1 = greens_entry(box, E, 0, c);
            SignedLog g2 = greens_entry(box, E, c, (int)(n - 1));
            lg_left[(size_t)i] = g1.lg;
            lg_right[(size_t)i] = g2.lg;
            mu = std::min(mu, -g1.lg / (double)c);
            mu = std::min(mu, -g2.lg / (double)(n - 1 - c));
        }
    } catch (const std::domain_error&) {
        ok = false; // E collides with a block eigenvalue: no resolvent bound
    }
    if (!ok) {
        gi.mu = -kInf;
        gi.certified = false;
        gi.cert_left_worst = kInf;
        gi.cert_right_worst = kInf;
        return gi;
    }
    gi.mu = mu;
    double wl = -kInf, wr = -kInf;
    for (std::int64_t i = 0; i < count; ++i) {
        int c = (int)(gi.covered_lo - n1 + i);
        wl = std::max(wl, lg_left[(size_t)i] + mu * (double)c);
        wr = std::max(wr, lg_right[(size_t)i] + mu * (double)(n - 1 - c));
    }
    gi.cert_left_worst = wl;
    gi.cert_right_worst = wr;
    gi.certified = mu > 0;
    return gi;
}

RnEstimate scale_error_estimate(const ScaleChoice& scale, const IDSTable& ids, double E,
                                double C_d) {
    RnEstimate e;
    double n = (double)scale.n, q = (double)scale.q;
    double ar = (double)(scale.r < 0 ? -scale.r : scale.r);
    e.root_term = std::log(2.0) / std::sqrt(n);
    CutoffPair cut = cutoffs_for_scale(scale, C_d);
    e.lcorr_term = 2.0 * l_corr(ids, E, cut);
    e.logq_term = 400.0 * C_d * std::log(q) / q;
    e.remainder_term = 400.0 * C_d * ar * std::log(q) / n;
    e.value = e.root_term + e.lcorr_term + e.logq_term + e.remainder_term;
    e.note = "potential-dependent C/q term unquantified and omitted";
    return e;
}

GoodIntervalSearch find_good_interval(double x, std::int64_t m, double E,
                                      const PointRegime& regime, const ResonanceMap& map,
                                      const IDSTable& ids, const MonotonePotential& pot) {
    GoodIntervalSearch res;
    res.reference_L = thouless(ids, E);
    try {
        res.set = build_sampling_set(m, regime.kind, map);
    } catch (const std::exception& ex) {
        res.failure = ex.what();
        return res;
    }
    std::int64_t n = res.set.n_det;
    ScaleChoice sc = choose_scale(n, map.freq);
    CutoffPair cut;
    try {
        cut = cutoffs_for_scale(sc, map.C_d);
    } catch (const std::exception& ex) {
        std::ostringstream os;
        os << "determinant scale too small for cutoffs (q(" << n << ") = " << sc.q
           << "): " << ex.what();
        res.failure = os.str();
        return res;
    }
    res.rn = scale_error_estimate(sc, ids, E, map.C_d);

    int t = res.set.t_for_bound;
    double d = res.set.d_for_bound;
    res.sampling_bound_log = 0;
    for (int i = 1; i <= t; ++i)
        res.sampling_bound_log += std::log(pot.gamma * 0.5 * d * (double)i);

    std::int64_t margin = (std::int64_t)std::ceil(map.sigma * (double)n);
    if (margin < 1 || 2 * margin > n - 1) {
        res.failure = "determinant window too short for the interior margin";
        return res;
    }

    size_t nj = res.set.J.size();
    res.shifts.resize(nj);
    par::for_index((std::int64_t)nj, [&](std::int64_t i) {
        std::int64_t j = res.set.J[(size_t)i];
        BoxOperator box = build_box(x, map.freq, pot, j, n);
        DeterminantSplit sp = split_determinant(box, E, cut);
        ShiftDiagnostic& dg = res.shifts[(size_t)i];
        dg.j = j;
        dg.log_p_minus = sp.p_minus.lg;
        dg.count_minus = sp.count_minus;
        dg.covers_m = j + margin <= m && m <= j + n - 1 - margin;
        dg.passed = dg.log_p_minus >= res.sampling_bound_log - 1e-9;
    });

    bool any_cover = false;
    double bestlg = -kInf;
    std::int64_t bestj = 0;
    for (const ShiftDiagnostic& dg : res.shifts) {
        if (!dg.covers_m) continue;
        any_cover = true;
        if (dg.passed && dg.log_p_minus > bestlg) {
            bestlg = dg.log_p_minus;
            bestj = dg.j;
            res.found = true;
        }
    }
    if (!res.found) {
        res.failure = any_cover
                          ? "no sampling shift covering m passed the close-factor bound"
                          : "no sampling window covers m with the interior margin";
        return res;
    }
    res.chosen_shift = bestj;
    res.log_p_minus = bestlg;
    res.interval = certify_interval(x, map.freq, pot, bestj, bestj + n - 1, E, map.sigma);
    if (!res.interval.certified) {
        res.ldt_slack_flag = true;
        res.failure = "selected window passed the bound but failed Green certification";
    }
    return res;
}

} // namespace monoloc
