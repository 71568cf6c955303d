#include "monoloc/patching.hpp"

#include <algorithm>
#include <cmath>
#include <queue>
#include <sstream>
#include <stdexcept>

#include "monoloc/box_operator.hpp"
#include "monoloc/parallel.hpp"

namespace monoloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

double log_add(double a, double b) {
    if (a == -kInf) return b;
    if (b == -kInf) return a;
    double hi = std::max(a, b);
    return hi + std::log1p(std::exp(std::min(a, b) - hi));
}

std::string fmt_point(std::int64_t m) {
    std::ostringstream os;
    os << "m = " << m;
    return os.str();
}

} // namespace

const GoodRecord& GoodIntervalCollection::at(std::int64_t m) const {
    if (m < inner_lo || m > inner_hi)
        throw std::out_of_range("point " + std::to_string(m) + " is outside the covered window");
    return records[std::size_t(m - inner_lo)];
}

void validate_collection(const GoodIntervalCollection& col) {
    if (col.outer_lo > col.inner_lo || col.inner_lo > col.inner_hi || col.inner_hi > col.outer_hi)
        throw std::invalid_argument("window nesting violated: need outer <= inner <= inner <= outer");
    if (!(col.mu > 0) || !(col.sigma > 0) || col.sigma >= 0.5)
        throw std::invalid_argument("floor parameters out of range: mu > 0 and sigma in (0, 1/2)");
    if (col.L < 1) throw std::invalid_argument("length floor must be at least 1");
    if (!(col.mu * col.sigma * double(col.L) > std::log(2.0)))
        throw std::invalid_argument("step cost floor too small: need e^{mu sigma L} > 2");
    const std::size_t want = std::size_t(col.inner_hi - col.inner_lo + 1);
    if (col.records.size() != want)
        throw std::invalid_argument("record table must cover every point of the inner window");
    for (std::int64_t m = col.inner_lo; m <= col.inner_hi; ++m) {
        const GoodRecord& r = col.records[std::size_t(m - col.inner_lo)];
        const std::int64_t len = r.n2 - r.n1 + 1;
        if (len < col.L)
            throw std::invalid_argument("interval at " + fmt_point(m) + " is shorter than the length floor");
        if (r.mu_m < col.mu)
            throw std::invalid_argument("interval at " + fmt_point(m) + " has exponent below the floor");
        if (r.n1 - 1 < col.outer_lo || r.n2 + 1 > col.outer_hi)
            throw std::invalid_argument("interval at " + fmt_point(m) + " exits outside the outer window");
        const double margin = col.sigma * double(len);
        if (double(m - r.n1) < margin || double(r.n2 - m) < margin)
            throw std::invalid_argument("interval at " + fmt_point(m) + " leaves no interior margin");
    }
}

bool psi_regular(const std::vector<double>& psi_log, std::int64_t base, std::int64_t m,
                 std::int64_t n1, std::int64_t n2, double mu, double sigma) {
    const std::int64_t len = n2 - n1 + 1;
    if (len < 3) throw std::invalid_argument("window too short");
    const double margin = sigma * double(len);
    if (double(m - n1) < margin || double(n2 - m) < margin)
        throw std::invalid_argument("point " + std::to_string(m) +
                                    " violates the interior margin of [" + std::to_string(n1) +
                                    ", " + std::to_string(n2) + "]");
    auto fetch = [&](std::int64_t site) {
        const std::int64_t i = site - base;
        if (i < 0 || std::size_t(i) >= psi_log.size())
            throw std::out_of_range("vector does not reach site " + std::to_string(site));
        return psi_log[std::size_t(i)];
    };
    const double lhs = fetch(m);
    const double rhs = log_add(-mu * double(m - n1) + fetch(n1 - 1),
                               -mu * double(n2 - m) + fetch(n2 + 1));
    return lhs <= rhs + 1e-12 * (1 + std::fabs(rhs));
}

namespace {

struct PathDfs {
    const GoodIntervalCollection& col;
    double weight_cutoff;
    int length_cutoff; // -1 means no limit
    std::int64_t node_budget;
    std::int64_t nodes = 0;
    std::vector<Path> out;
    // mass left in branches cut by the length limit, as log sum of e^{-w}
    double open_mass_log = -kInf;

    void run(std::int64_t start) {
        Path p;
        p.vertices.push_back(start);
        descend(p);
    }

    void descend(Path& p) {
        if (++nodes > node_budget)
            throw std::runtime_error("path enumeration exceeded the node budget of " +
                                     std::to_string(node_budget) + " vertices");
        const std::int64_t v = p.vertices.back();
        if (v < col.inner_lo || v > col.inner_hi) {
            // completed paths copy their whole vertex chain into the output,
            // so charge that storage against the same budget; otherwise a
            // bouncy collection can exhaust memory before the visit counter
            // trips
            nodes += std::int64_t(p.vertices.size());
            if (nodes > node_budget)
                throw std::runtime_error("path enumeration exceeded the node budget of " +
                                         std::to_string(node_budget) + " vertices");
            out.push_back(p);
            return;
        }
        if (length_cutoff >= 0 && p.length() >= length_cutoff) {
            open_mass_log = log_add(open_mass_log, -p.weight);
            return;
        }
        const GoodRecord& r = col.at(v);
        const std::int64_t exits[2] = {r.n1 - 1, r.n2 + 1};
        // restore the weight by value, not by subtracting back: the round
        // trip p.weight += w; p.weight -= w drifts in floating point and the
        // drift shifts cutoff decisions between sibling branches
        const double w0 = p.weight;
        for (std::int64_t e : exits) {
            const std::int64_t gap = std::llabs(e - v);
            const double w = r.mu_m * double(gap - 1);
            if (w0 + w > weight_cutoff) continue;
            p.vertices.push_back(e);
            p.weight = w0 + w;
            p.span += gap;
            descend(p);
            p.span -= gap;
            p.weight = w0;
            p.vertices.pop_back();
        }
    }
};

} // namespace

std::vector<Path> enumerate_paths(const GoodIntervalCollection& col, std::int64_t m,
                                  double weight_cutoff, std::int64_t node_budget) {
    validate_collection(col);
    if (m < col.inner_lo || m > col.inner_hi)
        throw std::invalid_argument("start point " + std::to_string(m) + " is not covered");
    PathDfs dfs{col, weight_cutoff, -1, node_budget};
    dfs.run(m);
    std::sort(dfs.out.begin(), dfs.out.end(),
              [](const Path& a, const Path& b) { return a.vertices < b.vertices; });
    return dfs.out;
}

TerminatingBoundReport verify_terminating_bound(const GoodIntervalCollection& col,
                                                const std::vector<double>& psi_log,
                                                std::int64_t psi_base, std::int64_t m) {
    validate_collection(col);
    for (std::int64_t p = col.inner_lo; p <= col.inner_hi; ++p) {
        const GoodRecord& r = col.at(p);
        if (!psi_regular(psi_log, psi_base, p, r.n1, r.n2, r.mu_m, col.sigma))
            throw std::invalid_argument("psi is not regular at " + fmt_point(p) +
                                        " so the path bound does not apply");
    }
    double M_log = -kInf;
    for (std::int64_t site = col.outer_lo; site <= col.outer_hi; ++site) {
        const std::int64_t i = site - psi_base;
        if (i < 0 || std::size_t(i) >= psi_log.size())
            throw std::out_of_range("vector does not cover the outer window");
        M_log = std::max(M_log, psi_log[std::size_t(i)]);
    }
    // after K steps at most 2^K branches survive, each already costing
    // K mu sigma L, so the unfinished mass is M rho^K / (1 - rho)
    const double log_rho = std::log(2.0) - col.mu * col.sigma * double(col.L);
    const double target = std::log(1e-12) + std::min(M_log, 0.0);
    int K = 1;
    while (M_log + K * log_rho - std::log1p(-std::exp(log_rho)) > target && K < 4000) ++K;

    TerminatingBoundReport rep;
    rep.max_length = K;
    PathDfs dfs{col, kInf, K, std::int64_t(50000000)};
    dfs.run(m);
    double sum_log = -kInf;
    for (const Path& p : dfs.out)
        sum_log = log_add(sum_log, -p.weight + psi_log[std::size_t(p.vertices.back() - psi_base)]);
    rep.path_count = dfs.out.size();
    rep.path_sum_log = sum_log;
    rep.tail_log = dfs.open_mass_log == -kInf ? -kInf : dfs.open_mass_log + M_log;
    rep.lhs_log = psi_log[std::size_t(m - psi_base)];
    rep.rhs_log = log_add(rep.path_sum_log, rep.tail_log);
    rep.pass = rep.lhs_log <= rep.rhs_log + 1e-9 * (1 + std::fabs(rep.rhs_log));
    return rep;
}

MinWeightResult min_weight(const GoodIntervalCollection& col, std::int64_t m, Side side) {
    validate_collection(col);
    if (m < col.inner_lo || m > col.inner_hi)
        throw std::invalid_argument("start point " + std::to_string(m) + " is not covered");

    const std::int64_t n_inner = col.inner_hi - col.inner_lo + 1;
    std::vector<double> dist(std::size_t(n_inner), kInf);
    std::vector<std::int64_t> pred(std::size_t(n_inner), INT64_MIN);
    using QE = std::pair<double, std::int64_t>;
    std::priority_queue<QE, std::vector<QE>, std::greater<>> pq;
    dist[std::size_t(m - col.inner_lo)] = 0;
    pq.push({0.0, m});

    MinWeightResult res;
    std::int64_t best_exit = INT64_MIN, best_from = INT64_MIN;
    while (!pq.empty()) {
        auto [d, v] = pq.top();
        pq.pop();
        if (d > dist[std::size_t(v - col.inner_lo)]) continue;
        const GoodRecord& r = col.at(v);
        const std::int64_t exits[2] = {r.n1 - 1, r.n2 + 1};
        for (std::int64_t e : exits) {
            const double w = d + r.mu_m * double(std::llabs(e - v) - 1);
            if (e < col.inner_lo || e > col.inner_hi) {
                const bool is_left = e < col.inner_lo;
                if ((side == Side::left) != is_left) continue;
                if (w < res.weight) {
                    res.weight = w;
                    res.reachable = true;
                    best_exit = e;
                    best_from = v;
                }
                continue;
            }
            auto& slot = dist[std::size_t(e - col.inner_lo)];
            if (w < slot) {
                slot = w;
                pred[std::size_t(e - col.inner_lo)] = v;
                pq.push({w, e});
            }
        }
    }
    if (!res.reachable) {
        res.weight = kInf;
        return res;
    }
    std::vector<std::int64_t> chain{best_exit};
    for (std::int64_t v = best_from; v != INT64_MIN; v = pred[std::size_t(v - col.inner_lo)])
        chain.push_back(v);
    std::reverse(chain.begin(), chain.end());
    res.witness.vertices = chain;
    for (std::size_t i = 0; i + 1 < chain.size(); ++i) {
        const std::int64_t gap = std::llabs(chain[i + 1] - chain[i]);
        res.witness.weight += col.at(chain[i]).mu_m * double(gap - 1);
        res.witness.span += gap;
    }

    const double sL = col.sigma * double(col.L);
    res.a = 16.0 * (1.0 + col.mu) * std::log(sL) / (col.mu * sL);
    res.a_small = res.a <= 0.01 && res.a > 0;
    res.dominating_bound_log = -(1.0 - res.a) * res.weight;
    if (!res.a_small) {
        // outside the dominating regime the comparison is not claimed, and on
        // short windows the companion enumeration has exponentially many
        // terminating paths under any useful cutoff
        res.side_sum_log = std::numeric_limits<double>::quiet_NaN();
        res.dominating_pass = false;
        return res;
    }
    // everything deeper than min + 80 contributes less than e^{-80} relative
    std::vector<Path> all = enumerate_paths(col, m, res.weight + 80.0, 50000000);
    double side_sum = -kInf;
    for (const Path& p : all) {
        const bool is_left = p.vertices.back() < col.inner_lo;
        if ((side == Side::left) == is_left) side_sum = log_add(side_sum, -p.weight);
    }
    res.side_sum_log = side_sum;
    res.dominating_pass = side_sum <= res.dominating_bound_log + 1e-9;
    return res;
}

double DecayProfile::value_at(std::int64_t m) const {
    if (m < lo || m > hi) return -kInf;
    return log_psi[std::size_t(m - lo)];
}

namespace {

bool in_resonant_zone(const DecayProfile& p, std::int64_t m) {
    if (p.resonant_k < 0 || p.res_q_k <= 0) return false;
    const std::int64_t q = p.res_q_k;
    std::int64_t rem = m % q;
    if (rem > q / 2) rem -= q;
    if (rem < -(q / 2)) rem += q;
    return std::llabs(rem) <= p.res_b_k;
}

} // namespace

AnnulusFit fit_decay_window(const DecayProfile& profile, std::int64_t lo, std::int64_t hi) {
    AnnulusFit fit;
    fit.lo = lo;
    fit.hi = hi;
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::int64_t m = profile.lo; m <= profile.hi; ++m) {
        const std::int64_t a = std::llabs(m);
        if (a < lo || a > hi) continue;
        if (in_resonant_zone(profile, m)) continue;
        const double y = profile.value_at(m);
        if (!std::isfinite(y) || y < profile.noise_floor) continue;
        const double x = double(a);
        sx += x;
        sy += y;
        sxx += x * x;
        sxy += x * y;
        ++n;
    }
    fit.points = n;
    if (n >= 2) {
        const double det = n * sxx - sx * sx;
        if (det > 0) {
            fit.slope = -(n * sxy - sx * sy) / det;
            fit.intercept = (sy * sxx - sx * sxy) / det;
        }
    }
    return fit;
}

DecayProfile decay_profile(const FrequencyModel& freq, const MonotonePotential& pot,
                           int k_max, double E_target, double x0, std::int64_t box_size,
                           double tau, double C_d, double L_reference, double ipr_min,
                           double noise_floor) {
    if (k_max < 1 || k_max > freq.order())
        throw std::invalid_argument("k_max must name a denominator scale of the expansion");
    if (!(tau > 0 && tau < 0.125)) throw std::invalid_argument("tau must lie in (0, 1/8)");

    const auto& dens = freq.cf.convergent_denominators;
    const double q_top = log_bigint(dens[std::size_t(std::min<int>(k_max + 1, freq.order()))]);
    std::int64_t n = box_size;
    if (n <= 0) {
        double want = 2.0 * std::sqrt(tau) * std::exp(std::min(q_top, std::log(8000.0))) + 1.0;
        const double q_k = double(dens[std::size_t(k_max)].convert_to<long long>());
        n = std::llround(std::clamp(std::max(want, 4.0 * q_k + 1.0), 257.0, 4001.0));
    }

    DecayProfile prof;
    prof.noise_floor = noise_floor;
    const std::int64_t h = -(n / 2);
    BoxOperator box = build_box(x0, freq, pot, h, n);
    auto [idx, lam] = eigenvalue_near(box, E_target);
    if (!std::isfinite(lam)) {
        prof.note = "no finite eigenvalue near the target energy";
        return prof;
    }
    double lam_refined = lam;
    std::vector<double> v = eigenvector(box, lam, &lam_refined);
    prof.energy = lam_refined;

    double ipr = 0;
    for (double c : v) ipr += c * c * c * c;
    prof.ipr = ipr;

    std::size_t cl = 0;
    for (std::size_t i = 1; i < v.size(); ++i)
        if (std::fabs(v[i]) > std::fabs(v[cl])) cl = i;
    prof.center = h + std::int64_t(cl);
    prof.lo = -std::int64_t(cl);
    prof.hi = std::int64_t(v.size()) - 1 - std::int64_t(cl);

    const std::size_t c1 = cl + 1 < v.size() ? cl + 1 : cl - 1;
    const double norm_log = 0.5 * std::log(v[cl] * v[cl] + v[c1] * v[c1]);
    prof.log_psi.resize(v.size());
    for (std::size_t i = 0; i < v.size(); ++i) {
        const double a = std::fabs(v[i]);
        prof.log_psi[i] = a == 0 ? -kInf : std::log(a) - norm_log;
    }

    if (ipr < ipr_min) {
        prof.note = "eigenvector too spread out for a decay profile (participation filter)";
        return prof;
    }

    // the top Liouville scale supplies the resonance zones, if there is one
    const double logC = C_d;
    for (int k = std::min(k_max, freq.order() - 1); k >= 1; --k) {
        const double lq = log_bigint(dens[std::size_t(k)]);
        const double lq1 = log_bigint(dens[std::size_t(k + 1)]);
        if (dens[std::size_t(k)] > bigint(10) && lq1 > logC * lq &&
            dens[std::size_t(k)] <= bigint(n)) {
            prof.resonant_k = k;
            prof.res_q_k = dens[std::size_t(k)].convert_to<long long>();
            prof.res_b_k = std::int64_t(std::floor(tau * double(prof.res_q_k)));
            prof.beta_k = lq1 / double(prof.res_q_k);
            break;
        }
    }

    const std::int64_t reach = std::max(std::llabs(prof.lo), std::llabs(prof.hi));
    for (int k = 1; k <= std::min(k_max, freq.order() - 1); ++k) {
        const double qk = std::exp(log_bigint(dens[std::size_t(k)]));
        const double qk1 = std::exp(std::min(log_bigint(dens[std::size_t(k + 1)]), 700.0));
        const std::int64_t a_lo = std::int64_t(std::ceil(std::sqrt(tau) * qk));
        const std::int64_t a_hi = std::min<std::int64_t>(
            std::int64_t(std::floor(std::min(std::sqrt(tau) * qk1, 9.0e18))), reach);
        if (a_lo < 2 || a_hi <= a_lo) continue;
        AnnulusFit fit = fit_decay_window(prof, a_lo, a_hi);
        if (fit.points < 4) continue;
        fit.k = k;
        fit.liouville = dens[std::size_t(k)] > bigint(10) &&
                        log_bigint(dens[std::size_t(k + 1)]) > logC * log_bigint(dens[std::size_t(k)]);
        if (std::isfinite(L_reference)) {
            double beta = log_bigint(dens[std::size_t(k + 1)]) / qk;
            fit.predicted = fit.liouville ? L_reference - beta : L_reference;
        } else {
            fit.predicted = std::numeric_limits<double>::quiet_NaN();
        }
        prof.annuli.push_back(fit);
    }

    if (prof.resonant_k >= 0) {
        const std::int64_t q = prof.res_q_k, b = prof.res_b_k;
        const std::int64_t lcap = reach / q + 1;
        for (std::int64_t ell = -lcap; ell <= lcap; ++ell) {
            const std::int64_t zlo = std::max(prof.lo, ell * q - b);
            const std::int64_t zhi = std::min(prof.hi, ell * q + b);
            if (zlo > zhi) continue;
            ResonantPeak pk;
            pk.ell = ell;
            pk.log_r = -kInf;
            pk.argmax = zlo;
            for (std::int64_t mm = zlo; mm <= zhi; ++mm) {
                const double y = prof.value_at(mm);
                if (y > pk.log_r) {
                    pk.log_r = y;
                    pk.argmax = mm;
                }
            }
            pk.above_floor = pk.log_r >= noise_floor;
            prof.peaks.push_back(pk);
        }
    }

    prof.conclusive = true;
    return prof;
}

ResonantRecursionReport resonant_recursion_check(const DecayProfile& profile,
                                                 const ResonanceMap& map, double L_E,
                                                 double beta_k, double tau) {
    ResonantRecursionReport rep;
    rep.L_reference = L_E;
    if (!map.liouville)
        throw std::invalid_argument("the scale is not Liouville, there are no resonances to track");
    rep.tau_small_ok = L_E * (1.0 - 2.0 * tau) - beta_k > 0;
    if (!rep.tau_small_ok)
        throw std::invalid_argument("decay budget exhausted: L (1 - 2 tau) must exceed beta_k");
    if (profile.resonant_k < 0 || profile.peaks.empty()) {
        rep.note = "profile carries no resonance zones";
        return rep;
    }
    const std::int64_t q = profile.res_q_k, b = profile.res_b_k;

    auto peak_at = [&](std::int64_t ell) -> const ResonantPeak* {
        for (const ResonantPeak& p : profile.peaks)
            if (p.ell == ell) return &p;
        return nullptr;
    };

    // (a) between consecutive zones the profile must sit under the two-peak
    // envelope r_l e^{-mu d_l} + r_{l+1} e^{-mu d_{l+1}}; bisect for the
    // largest exponent each stretch supports
    double mu_min = kInf;
    bool any_between = false;
    for (const ResonantPeak& p : profile.peaks) {
        const std::int64_t ell = p.ell;
        const ResonantPeak* nxt = peak_at(ell + 1);
        if (!nxt) continue;
        if (!p.above_floor) continue;
        const std::int64_t from = ell * q + b + 1, to = (ell + 1) * q - b - 1;
        if (from > to) continue;
        auto holds = [&](double mu) {
            for (std::int64_t m = std::max(from, profile.lo);
                 m <= std::min(to, profile.hi); ++m) {
                const double y = profile.value_at(m);
                if (!std::isfinite(y) || y < profile.noise_floor) continue;
                const double d1 = double(m - (ell * q + b));
                const double d2 = double((ell + 1) * q - b - m);
                const double env = log_add(p.log_r - mu * d1, nxt->log_r - mu * d2);
                if (y > env + 1e-9) return false;
            }
            return true;
        };
        BetweenZoneCheck chk;
        chk.ell = ell;
        for (std::int64_t m = std::max(from, profile.lo); m <= std::min(to, profile.hi); ++m) {
            const double y = profile.value_at(m);
            if (std::isfinite(y) && y >= profile.noise_floor) ++chk.points;
        }
        if (chk.points == 0) continue;
        double lo2 = 0, hi2 = 4.0 * std::max(L_E, 1.0);
        if (!holds(lo2)) {
            chk.mu_hat = 0;
            chk.pass = false;
        } else {
            for (int it = 0; it < 60; ++it) {
                const double mid = 0.5 * (lo2 + hi2);
                (holds(mid) ? lo2 : hi2) = mid;
            }
            chk.mu_hat = lo2;
            chk.pass = lo2 > 0;
        }
        rep.between.push_back(chk);
        mu_min = std::min(mu_min, chk.mu_hat);
        any_between = true;
    }
    rep.mu_hat = any_between ? mu_min : 0;

    // (b) peak weights against the predicted ladder
    bool any_peak = false;
    for (const ResonantPeak& p : profile.peaks) {
        if (p.ell <= 0) continue;
        PeakTrendRow row;
        row.ell = p.ell;
        row.observed_log_r = p.log_r;
        const double lq = double(p.ell) * double(q);
        row.predicted_log_r = -((L_E - beta_k) * lq + double(p.ell) * std::log(double(p.ell)));
        row.slack = row.observed_log_r - row.predicted_log_r;
        row.above_floor = p.above_floor;
        rep.trend.push_back(row);
        if (p.above_floor) any_peak = true;
    }
    if (!any_peak) {
        rep.note = "all side peaks sit below the noise floor";
        rep.conclusive = false;
        return rep;
    }
    rep.conclusive = any_between;
    if (!any_between && rep.note.empty()) rep.note = "no usable stretch between zones";
    bool all_pass = any_between;
    for (const BetweenZoneCheck& c : rep.between) all_pass = all_pass && c.pass;
    rep.pass = rep.conclusive && all_pass && rep.mu_hat > 0;
    return rep;
}

} // namespace monoloc
