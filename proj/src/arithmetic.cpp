#include "monoloc/arithmetic.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

namespace monoloc {

double log_bigint(const bigint& v) {
    if (v <= 0) throw std::invalid_argument("log_bigint: needs a positive value");
    unsigned long b = boost::multiprecision::msb(v);
    if (b < 900) return std::log(v.convert_to<double>());
    bigint top = v >> (b - 52);
    return std::log(top.convert_to<double>()) + (double)(b - 52) * std::log(2.0);
}

ContinuedFraction cf_from_coefficients(const std::vector<bigint>& coeffs) {
    if (coeffs.empty()) throw std::invalid_argument("continued fraction needs at least one coefficient");
    if (coeffs[0] < 0) throw std::invalid_argument("a_0 must be >= 0");
    for (size_t k = 1; k < coeffs.size(); ++k)
        if (coeffs[k] < 1) {
            std::ostringstream os;
            os << "coefficient a_" << k << " must be >= 1";
            throw std::invalid_argument(os.str());
        }
    ContinuedFraction cf;
    cf.coefficients = coeffs;
    // seeds p_{-1}=1, p_{-2}=0, q_{-1}=0, q_{-2}=1
    bigint p_prev2 = 0, p_prev1 = 1, q_prev2 = 1, q_prev1 = 0;
    for (const bigint& a : coeffs) {
        bigint p = a * p_prev1 + p_prev2;
        bigint q = a * q_prev1 + q_prev2;
        cf.convergent_numerators.push_back(p);
        cf.convergent_denominators.push_back(q);
        p_prev2 = p_prev1; p_prev1 = p;
        q_prev2 = q_prev1; q_prev1 = q;
    }
    return cf;
}

ContinuedFraction cf_from_coefficients(const std::vector<std::int64_t>& coeffs) {
    std::vector<bigint> big(coeffs.begin(), coeffs.end());
    return cf_from_coefficients(big);
}

std::vector<BetaEstimateRow> beta_estimate(const ContinuedFraction& cf) {
    if (cf.convergent_denominators.size() < 2)
        throw std::invalid_argument("beta_estimate needs at least two convergents");
    std::vector<BetaEstimateRow> rows;
    double run = -std::numeric_limits<double>::infinity();
    for (int k = 0; k + 1 <= cf.order(); ++k) {
        const bigint& qk = cf.convergent_denominators[k];
        const bigint& qk1 = cf.convergent_denominators[k + 1];
        double ratio = log_bigint(qk1) / qk.convert_to<double>();
        run = std::max(run, ratio);
        rows.push_back({k, ratio, run});
    }
    return rows;
}

FrequencyModel make_frequency(const std::vector<bigint>& coeffs, int precision_bits) {
    if (precision_bits < 64) throw std::invalid_argument("precision_bits must be >= 64");
    FrequencyModel fm;
    fm.cf = cf_from_coefficients(coeffs);
    fm.precision_bits = precision_bits;
    const bigint& p = fm.cf.convergent_numerators.back();
    const bigint& q = fm.cf.convergent_denominators.back();
    bigint scaled = (bigint(1) << precision_bits) * p + q / 2;
    fm.fixed_value = scaled / q;
    // frequencies live in (0,1); reduce mod 1 in fixed point just in case a_0 > 0
    bigint mod = bigint(1) << precision_bits;
    fm.fixed_value %= mod;
    if (fm.fixed_value < 0) fm.fixed_value += mod;
    if (fm.cf.convergent_denominators.size() >= 2) fm.beta_running = beta_estimate(fm.cf);
    return fm;
}

FrequencyModel make_frequency(const std::vector<std::int64_t>& coeffs, int precision_bits) {
    std::vector<bigint> big(coeffs.begin(), coeffs.end());
    return make_frequency(big, precision_bits);
}

double FrequencyModel::value() const {
    if (fixed_value == 0) return 0.0;
    unsigned long b = boost::multiprecision::msb(fixed_value);
    if (b < 1000) return fixed_value.convert_to<double>() * std::pow(2.0, -precision_bits);
    bigint top = fixed_value >> (b - 52);
    return top.convert_to<double>() * std::pow(2.0, (double)(b - 52) - precision_bits);
}

std::int64_t FrequencyModel::max_orbit_length() const {
    // error after j steps is j * 2^-(B+1); certified contract is 2^-(B/2)
    int half = precision_bits / 2;
    if (half + 1 >= 62) return std::int64_t(1) << 62;
    return std::int64_t(1) << (half + 1);
}

std::vector<std::int64_t> FrequencyModel::denominators_i64() const {
    std::vector<std::int64_t> out;
    for (const bigint& q : cf.convergent_denominators) {
        if (q > std::numeric_limits<std::int64_t>::max()) break;
        std::int64_t v = q.convert_to<std::int64_t>();
        if (out.empty() || v != out.back()) out.push_back(v);
    }
    return out;
}

double torus_distance(double y) {
    double f = y - std::floor(y);
    return std::min(f, 1.0 - f);
}

namespace {

// exact fixed-point image of a double in [0,1): round(x * 2^B)
bigint to_fixed(double x, int bits) {
    if (!(x >= 0.0 && x < 1.0)) {
        x = x - std::floor(x); // wrap; doubles carry < 53 significant bits anyway
    }
    if (x == 0.0) return 0;
    int e;
    double m = std::frexp(x, &e); // x = m * 2^e, m in [0.5, 1)
    auto mant = (std::int64_t)std::ldexp(m, 53); // exact 53-bit integer
    int shift = bits + e - 53;
    bigint v = mant;
    if (shift >= 0) v <<= shift; else v >>= -shift;
    return v;
}

double from_fixed(const bigint& v, int bits) {
    // top 64 bits are plenty for a double
    if (v == 0) return 0.0;
    unsigned long b = boost::multiprecision::msb(v);
    if (b < 1000) {
        double num = v.convert_to<double>();
        return num * std::pow(2.0, -bits);
    }
    bigint top = v >> (b - 52);
    return top.convert_to<double>() * std::pow(2.0, (double)(b - 52) - bits);
}

} // namespace

std::vector<double> orbit(double x, const FrequencyModel& freq, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("orbit length must be >= 1");
    if (n > freq.max_orbit_length()) {
        std::ostringstream os;
        os << "orbit length " << n << " exceeds the certified budget "
           << freq.max_orbit_length() << " at " << freq.precision_bits << " bits";
        throw precision_error(os.str());
    }
    const int B = freq.precision_bits;
    const bigint mod = bigint(1) << B;
    bigint cur = to_fixed(x, B);
    std::vector<double> out;
    out.reserve((size_t)n);
    for (std::int64_t j = 0; j < n; ++j) {
        out.push_back(from_fixed(cur, B));
        cur += freq.fixed_value;
        if (cur >= mod) cur -= mod;
    }
    return out;
}

std::vector<double> orbit_window(double x, const FrequencyModel& freq,
                                 std::int64_t h, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("orbit length must be >= 1");
    std::int64_t reach = (h < 0 ? -h : h) + n;
    if (reach > freq.max_orbit_length()) {
        std::ostringstream os;
        os << "window reach " << reach << " exceeds the certified budget "
           << freq.max_orbit_length() << " at " << freq.precision_bits << " bits";
        throw precision_error(os.str());
    }
    const int B = freq.precision_bits;
    const bigint mod = bigint(1) << B;
    bigint cur = to_fixed(x, B) + bigint(h) * freq.fixed_value;
    cur %= mod;
    if (cur < 0) cur += mod;
    std::vector<double> out;
    out.reserve((size_t)n);
    for (std::int64_t j = 0; j < n; ++j) {
        out.push_back(from_fixed(cur, B));
        cur += freq.fixed_value;
        if (cur >= mod) cur -= mod;
    }
    return out;
}

double torus_norm_multiple(const FrequencyModel& freq, const bigint& j) {
    const bigint& p = freq.cf.convergent_numerators.back();
    const bigint& q = freq.cf.convergent_denominators.back();
    bigint m = (j * p) % q;
    if (m < 0) m += q;
    bigint d = std::min(m, bigint(q - m));
    return d.convert_to<double>() / q.convert_to<double>();
}

ThreeDistanceReport three_distance_check(const FrequencyModel& freq, int k) {
    ThreeDistanceReport rep;
    rep.k = k;
    const int K = freq.order();
    if (k < 1 || k > K - 1)
        throw std::invalid_argument("three_distance_check needs 1 <= k <= order-1");
    const bigint& p = freq.cf.convergent_numerators.back();
    const bigint& Q = freq.cf.convergent_denominators.back();
    const bigint& qk = freq.cf.convergent_denominators[(size_t)k];
    const bigint& qk_prev = freq.cf.convergent_denominators[(size_t)k - 1];
    const bigint& qk_next = freq.cf.convergent_denominators[(size_t)k + 1];

    auto norm_int = [&](const bigint& j) { // q_K * ||j alpha||
        bigint m = (j * p) % Q;
        if (m < 0) m += Q;
        return std::min(m, bigint(Q - m));
    };
    bigint m_prev = norm_int(qk_prev), m_cur = norm_int(qk);
    double dQ = Q.convert_to<double>();
    rep.norm_q_prev = m_prev.convert_to<double>() / dQ;
    rep.norm_q_cur = m_cur.convert_to<double>() / dQ;

    // exact orbit of j * p/Q for j < q_k, gaps in units of 1/Q
    std::int64_t nq = qk.convert_to<std::int64_t>();
    std::vector<bigint> pts;
    pts.reserve((size_t)nq);
    bigint cur = 0;
    for (std::int64_t j = 0; j < nq; ++j) {
        pts.push_back(cur);
        cur += p;
        cur %= Q;
    }
    std::sort(pts.begin(), pts.end());
    std::vector<bigint> gaps;
    for (size_t i = 0; i + 1 < pts.size(); ++i) gaps.push_back(pts[i + 1] - pts[i]);
    if (!pts.empty()) gaps.push_back(Q - pts.back() + pts.front());
    std::sort(gaps.begin(), gaps.end());
    gaps.erase(std::unique(gaps.begin(), gaps.end()), gaps.end());
    rep.gap_value_count = (int)gaps.size();
    if (!gaps.empty()) {
        rep.gap_small = gaps.front().convert_to<double>() / dQ;
        rep.gap_large = gaps.back().convert_to<double>() / dQ;
    }

    if (nq <= 2) {
        rep.degenerate = true;
        rep.pass = rep.gap_value_count <= 2;
        if (!rep.pass) rep.failure = "degenerate orbit with more than two gap values";
        return rep;
    }

    std::ostringstream fail;
    if (rep.gap_value_count > 2)
        fail << "more than two gap values (" << rep.gap_value_count << "); ";
    if (rep.gap_value_count >= 1 && gaps.front() != m_prev)
        fail << "small gap != ||q_{k-1} a|| (" << rep.gap_small << " vs " << rep.norm_q_prev << "); ";
    if (rep.gap_value_count == 2 && gaps.back() != m_prev + m_cur)
        fail << "large gap != ||q_{k-1} a|| + ||q_k a||; ";
    // sandwich, exact integer comparisons: 1/(2 q_k) <= ||q_{k-1} a|| < 1/q_k
    if (2 * qk * m_prev < Q) fail << "||q_{k-1} a|| < 1/(2 q_k); ";
    if (qk * m_prev >= Q) fail << "||q_{k-1} a|| >= 1/q_k; ";
    // 1/q_k < gap_large <= 1/q_k + 1/q_{k+1} (<= 2/q_k since q_{k+1} >= q_k)
    bigint large = m_prev + m_cur;
    if (qk * large <= Q) fail << "large gap <= 1/q_k; ";
    if (qk * qk_next * large > Q * (qk + qk_next)) fail << "large gap > 1/q_k + 1/q_{k+1}; ";
    rep.failure = fail.str();
    rep.pass = rep.failure.empty();
    return rep;
}

DiscrepancyReport discrepancy(const std::vector<double>& points) {
    if (points.empty()) throw std::invalid_argument("discrepancy of an empty point set");
    for (double y : points)
        if (!(y >= 0.0 && y < 1.0)) throw std::invalid_argument("discrepancy points must lie in [0,1)");
    std::vector<double> ys(points);
    std::sort(ys.begin(), ys.end());
    const double n = (double)ys.size();
    DiscrepancyReport rep;
    rep.n = (std::int64_t)ys.size();
    // sup of the step-vs-linear deviation is attained at a sample point or its left limit
    for (size_t i = 0; i < ys.size(); ++i) {
        double up = (double)(i + 1) / n - ys[i];
        double down = ys[i] - (double)i / n;
        double v = std::max(up, down);
        if (v > rep.value) {
            rep.value = v;
            rep.witness_t = ys[i];
        }
    }
    return rep;
}

KoksmaResult koksma_check(const std::function<double(double)>& g, double total_variation,
                          const std::vector<double>& points, double tolerance) {
    if (!std::isfinite(total_variation) || total_variation < 0)
        throw std::invalid_argument("koksma_check needs a finite declared total variation");
    KoksmaResult res;
    double err = 0;
    try {
        res.integral = boost::math::quadrature::gauss_kronrod<double, 61>::integrate(
            g, 0.0, 1.0, 12, 1e-12, &err);
        res.integration_ok = std::isfinite(res.integral) && err < 1e-6;
    } catch (...) {
        res.integration_ok = false;
    }
    if (!res.integration_ok) return res;
    double mean = 0;
    for (double y : points) mean += g(y);
    mean /= (double)points.size();
    res.lhs = std::fabs(res.integral - mean);
    res.rhs = total_variation * discrepancy(points).value;
    res.pass = res.lhs <= res.rhs + tolerance;
    return res;
}

} // namespace monoloc
