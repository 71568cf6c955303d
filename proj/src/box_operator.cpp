#include "monoloc/box_operator.hpp"

#include "monoloc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <sstream>
#include <stdexcept>

namespace monoloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();
const double kRescale = 1e150;
const double kRescaleLog = std::log(1e150);

// shared three-term recurrence D_j = (d_j - E) D_{j-1} - D_{j-2} over one
// Dirichlet block, kept in a common rescaled frame
struct RecOut {
    int sign_changes = 0;
    SignedLog det;
};

RecOut block_recurrence(const double* d, int len, double E) {
    double dm2 = 0.0, dm1 = 1.0, base = 0.0;
    int changes = 0, prev = 1;
    for (int j = 0; j < len; ++j) {
        double v = (d[j] - E) * dm1 - dm2;
        dm2 = dm1;
        dm1 = v;
        // a zero minor keeps the previous sign; the forced flip lands on the
        // next step, which matches strict counting of eigenvalues below E
        int s = v > 0 ? 1 : (v < 0 ? -1 : prev);
        if (s != prev) ++changes;
        prev = s;
        double m = std::max(std::fabs(dm1), std::fabs(dm2));
        if (m > kRescale) {
            dm1 /= kRescale; dm2 /= kRescale; base += kRescaleLog;
        } else if (m > 0.0 && m < 1.0 / kRescale) {
            dm1 *= kRescale; dm2 *= kRescale; base -= kRescaleLog;
        }
    }
    RecOut out;
    out.sign_changes = changes;
    if (dm1 == 0.0) out.det = SignedLog{};
    else out.det = SignedLog{dm1 > 0 ? 1 : -1, std::log(std::fabs(dm1)) + base};
    return out;
}

int block_count_below(const double* d, int len, double E) {
    return block_recurrence(d, len, E).sign_changes;
}

// leading principal minors as SignedLog: th[0] = 1, th[j] = det of the first j rows
// err_final_log, when requested, carries the running roundoff envelope of the
// last minor (same frame): a final value at or below it has no trustworthy sign
std::vector<SignedLog> leading_minors(const double* d, int len, double E,
                                      double* err_final_log = nullptr) {
    std::vector<SignedLog> th((size_t)len + 1);
    th[0] = SignedLog::one();
    double dm2 = 0.0, dm1 = 1.0, base = 0.0;
    double em2 = 0.0, em1 = 0.0;
    constexpr double eps = 2.220446049250313e-16;
    for (int j = 0; j < len; ++j) {
        const double a = std::fabs(d[j] - E);
        double v = (d[j] - E) * dm1 - dm2;
        double e = a * em1 + em2 + eps * (a * std::fabs(dm1) + std::fabs(dm2) + std::fabs(v));
        dm2 = dm1; dm1 = v;
        em2 = em1; em1 = e;
        if (v == 0.0) th[(size_t)j + 1] = SignedLog{};
        else th[(size_t)j + 1] = SignedLog{v > 0 ? 1 : -1, std::log(std::fabs(v)) + base};
        double m = std::max(std::max(std::fabs(dm1), std::fabs(dm2)), em1);
        if (m > kRescale) {
            dm1 /= kRescale; dm2 /= kRescale; em1 /= kRescale; em2 /= kRescale;
            base += kRescaleLog;
        } else if (m > 0.0 && m < 1.0 / kRescale) {
            dm1 *= kRescale; dm2 *= kRescale; em1 *= kRescale; em2 *= kRescale;
            base -= kRescaleLog;
        }
    }
    if (err_final_log)
        *err_final_log = em1 > 0.0 ? std::log(em1) + base
                                   : -std::numeric_limits<double>::infinity();
    return th;
}

struct Envelope {
    double lo, hi;
};

Envelope block_envelope(const double* d, int len) {
    double mn = kInf, mx = -kInf;
    for (int j = 0; j < len; ++j) {
        mn = std::min(mn, d[j]);
        mx = std::max(mx, d[j]);
    }
    return {mn - 2.5, mx + 2.5}; // Gershgorin plus slack
}

// idx-th smallest eigenvalue of one block, bisection on the Sturm count
double block_eigenvalue(const double* d, int len, int idx, Envelope env, double tol) {
    double lo = env.lo, hi = env.hi;
    for (int it = 0; it < 300 && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (block_count_below(d, len, mid) >= idx + 1) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

// inverse iteration with Rayleigh refinement inside one block; returns a unit
// vector whose decaying tail is resolved with relative accuracy down to the
// double underflow threshold
std::vector<double> block_eigenvector(const double* dp, int len, double& lam, double scale) {
    std::vector<double> d(dp, dp + len);
    int c = 0;
    double best = kInf;
    for (int i = 0; i < len; ++i) {
        double g = std::fabs(d[i] - lam);
        if (g < best) { best = g; c = i; }
    }
    std::vector<double> v(len, 0.0);
    v[c] = 1.0;
    double cur = lam;
    for (int it = 0; it < 12; ++it) {
        tridiag_shifted_solve(d, cur, v);
        double m = 0;
        for (double t : v) m = std::max(m, std::fabs(t));
        if (!(m > 0.0) || !std::isfinite(m)) {
            std::fill(v.begin(), v.end(), 0.0);
            v[c] = 1.0;
            cur += scale * 1e-14 * (it + 1);
            continue;
        }
        for (double& t : v) t /= m;
        double num = 0, den = 0;
        for (int i = 0; i < len; ++i) {
            double tv = d[i] * v[i];
            if (i > 0) tv += v[i - 1];
            if (i + 1 < len) tv += v[i + 1];
            num += v[i] * tv;
            den += v[i] * v[i];
        }
        double rq = num / den;
        double res2 = 0;
        for (int i = 0; i < len; ++i) {
            double tv = d[i] * v[i];
            if (i > 0) tv += v[i - 1];
            if (i + 1 < len) tv += v[i + 1];
            double r = tv - rq * v[i];
            res2 += r * r;
        }
        cur = rq;
        if (std::sqrt(res2 / den) < 1e-12 * scale && it >= 1) break;
    }
    double nrm = 0;
    for (double t : v) nrm += t * t;
    nrm = std::sqrt(nrm);
    int peak = 0;
    for (int i = 0; i < len; ++i)
        if (std::fabs(v[i]) > std::fabs(v[peak])) peak = i;
    double flip = (v[peak] < 0 ? -1.0 : 1.0) / nrm;
    for (double& t : v) t *= flip;
    lam = cur;
    return v;
}

int block_of_site(const BoxOperator& box, int i) {
    for (size_t b = 0; b < box.blocks.size(); ++b)
        if (i >= box.blocks[b].first && i < box.blocks[b].second) return (int)b;
    return -1;
}

} // namespace

double BoxOperator::scale() const {
    double m = 0;
    for (int i = 0; i < (int)n; ++i)
        if (!singular[(size_t)i]) m = std::max(m, std::fabs(diagonal[(size_t)i]));
    return std::max(1.0, m + 2.0);
}

BoxOperator build_box(double x, const FrequencyModel& freq, const MonotonePotential& pot,
                      std::int64_t h, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("box length must be >= 1");
    BoxOperator box;
    box.x = x;
    box.h = h;
    box.n = n;
    box.diagonal.resize((size_t)n);
    box.singular.assign((size_t)n, 0);
    std::vector<double> pts = orbit_window(x, freq, h, n);
    const double thr = std::pow(2.0, -freq.precision_bits / 2);
    const bool sing = pot.singular_at_zero();
    for (std::int64_t j = 0; j < n; ++j) {
        double y = pts[(size_t)j];
        if (sing && (y < thr || 1.0 - y < thr)) {
            box.diagonal[(size_t)j] = -kInf;
            box.singular[(size_t)j] = 1;
            ++box.singular_count;
        } else {
            box.diagonal[(size_t)j] = pot.evaluate(y);
        }
    }
    int run = -1;
    for (int j = 0; j < (int)n; ++j) {
        if (!box.singular[(size_t)j]) {
            if (run < 0) run = j;
        } else if (run >= 0) {
            box.blocks.push_back({run, j});
            run = -1;
        }
    }
    if (run >= 0) box.blocks.push_back({run, (int)n});
    return box;
}

int sturm_count(const BoxOperator& box, double E) {
    if (!std::isfinite(E)) throw std::invalid_argument("sturm_count needs a finite energy");
    int total = box.singular_count; // each singular site carries one -inf eigenvalue
    for (auto [lo, hi] : box.blocks)
        total += block_count_below(box.diagonal.data() + lo, hi - lo, E);
    return total;
}

double eigenvalue_by_index(const BoxOperator& box, int i) {
    if (i < 0 || i >= (int)box.n) throw std::invalid_argument("eigenvalue index out of range");
    if (i < box.singular_count) return -kInf;
    double sc = box.scale();
    double lo = kInf, hi = -kInf;
    for (auto [a, b] : box.blocks) {
        Envelope e = block_envelope(box.diagonal.data() + a, b - a);
        lo = std::min(lo, e.lo);
        hi = std::max(hi, e.hi);
    }
    double tol = 1e-12 * sc;
    for (int it = 0; it < 300 && hi - lo > tol; ++it) {
        double mid = 0.5 * (lo + hi);
        if (sturm_count(box, mid) >= i + 1) hi = mid;
        else lo = mid;
    }
    return 0.5 * (lo + hi);
}

std::pair<int, double> eigenvalue_near(const BoxOperator& box, double target) {
    if (box.blocks.empty()) return {0, -kInf};
    int N = sturm_count(box, target);
    int bi = -1;
    double bl = 0, bd = kInf;
    for (int cand : {N - 1, N}) {
        if (cand < 0 || cand >= (int)box.n) continue;
        double lam = eigenvalue_by_index(box, cand);
        double dist = std::isfinite(lam) ? std::fabs(lam - target) : kInf;
        if (dist < bd) { bd = dist; bi = cand; bl = lam; }
    }
    if (bi < 0) { // only -inf entries on the candidate list
        return {box.singular_count, eigenvalue_by_index(box, box.singular_count)};
    }
    return {bi, bl};
}

EigenData eigenvalues(const BoxOperator& box, bool want_vectors) {
    const int n = (int)box.n;
    const double sc = box.scale();
    const double tol = 1e-12 * sc;
    struct Task { int block, idx; };
    std::vector<Task> tasks;
    tasks.reserve((size_t)n);
    std::vector<Envelope> envs;
    for (auto [a, b] : box.blocks) {
        envs.push_back(block_envelope(box.diagonal.data() + a, b - a));
        for (int i = 0; i < b - a; ++i) tasks.push_back({(int)envs.size() - 1, i});
    }
    std::vector<double> lam(tasks.size());
    std::vector<std::vector<double>> vecs(want_vectors ? tasks.size() : 0);
    par::for_index((std::int64_t)tasks.size(), [&](std::int64_t t) {
        const Task& tk = tasks[(size_t)t];
        auto [a, b] = box.blocks[(size_t)tk.block];
        const double* d = box.diagonal.data() + a;
        double lv = block_eigenvalue(d, b - a, tk.idx, envs[(size_t)tk.block], tol);
        if (want_vectors) {
            std::vector<double> bv = block_eigenvector(d, b - a, lv, sc);
            std::vector<double> full((size_t)n, 0.0);
            std::copy(bv.begin(), bv.end(), full.begin() + a);
            vecs[(size_t)t] = std::move(full);
        }
        lam[(size_t)t] = lv;
    });

    std::vector<int> order((size_t)tasks.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](int u, int v) { return lam[(size_t)u] < lam[(size_t)v]; });

    EigenData out;
    out.eigenvalues.reserve((size_t)n);
    for (int s = 0; s < box.singular_count; ++s) out.eigenvalues.push_back(-kInf);
    if (want_vectors) {
        out.eigenvectors.reserve((size_t)n);
        for (int j = 0; j < n && (int)out.eigenvectors.size() < box.singular_count; ++j) {
            if (box.singular[(size_t)j]) {
                std::vector<double> delta((size_t)n, 0.0);
                delta[(size_t)j] = 1.0;
                out.eigenvectors.push_back(std::move(delta));
            }
        }
    }
    for (int o : order) {
        out.eigenvalues.push_back(lam[(size_t)o]);
        if (want_vectors) out.eigenvectors.push_back(std::move(vecs[(size_t)o]));
    }
    return out;
}

std::vector<double> eigenvector(const BoxOperator& box, double lambda_hat,
                                double* lambda_refined) {
    if (!std::isfinite(lambda_hat))
        throw std::invalid_argument("eigenvector needs a finite eigenvalue approximation");
    if (box.blocks.empty())
        throw std::invalid_argument("box has only singular sites");
    const double sc = box.scale();
    const double tol = 1e-12 * sc;
    int best_block = -1;
    double best_dist = kInf;
    for (size_t b = 0; b < box.blocks.size(); ++b) {
        auto [a, e] = box.blocks[b];
        const double* d = box.diagonal.data() + a;
        int len = e - a;
        Envelope env = block_envelope(d, len);
        int N = block_count_below(d, len, lambda_hat);
        for (int cand : {N - 1, N}) {
            if (cand < 0 || cand >= len) continue;
            double lv = block_eigenvalue(d, len, cand, env, tol);
            double dist = std::fabs(lv - lambda_hat);
            if (dist < best_dist) { best_dist = dist; best_block = (int)b; }
        }
    }
    if (best_block < 0) best_block = 0;
    auto [a, e] = box.blocks[(size_t)best_block];
    double lam = lambda_hat;
    std::vector<double> bv = block_eigenvector(box.diagonal.data() + a, e - a, lam, sc);
    if (lambda_refined) *lambda_refined = lam;
    std::vector<double> full((size_t)box.n, 0.0);
    std::copy(bv.begin(), bv.end(), full.begin() + a);
    return full;
}

SignedLog determinant(const BoxOperator& box, double E) {
    if (!std::isfinite(E)) throw std::invalid_argument("determinant needs a finite energy");
    // convention for split boxes: product of block determinants, singular rows dropped
    SignedLog out = SignedLog::one();
    for (auto [lo, hi] : box.blocks)
        out *= block_recurrence(box.diagonal.data() + lo, hi - lo, E).det;
    return out;
}

SignedLog greens_entry(const BoxOperator& box, double E, int i, int j) {
    if (i < 0 || j < 0 || i >= (int)box.n || j >= (int)box.n)
        throw std::invalid_argument("greens_entry site out of range");
    if (box.singular[(size_t)i] || box.singular[(size_t)j]) return SignedLog{};
    int bi = block_of_site(box, i), bj = block_of_site(box, j);
    if (bi != bj) return SignedLog{}; // resolvent is block diagonal across Dirichlet cuts
    auto [lo, hi] = box.blocks[(size_t)bi];
    const double* d = box.diagonal.data() + lo;
    const int L = hi - lo;
    int a = i - lo, b = j - lo;
    if (a > b) std::swap(a, b);
    double err_log = 0;
    std::vector<SignedLog> th = leading_minors(d, L, E, &err_log);
    if (th[(size_t)L].is_zero() || th[(size_t)L].lg <= err_log + std::log(8.0))
        throw std::domain_error("greens_entry: energy is an eigenvalue of the block");
    std::vector<double> rev(d, d + L);
    std::reverse(rev.begin(), rev.end());
    std::vector<SignedLog> ph = leading_minors(rev.data(), L, E);
    SignedLog g = th[(size_t)a] * ph[(size_t)(L - b - 1)] / th[(size_t)L];
    if (((a + b) & 1) != 0) g.sign = -g.sign;
    return g;
}

GreensChecked greens_entry_checked(const BoxOperator& box, double E, int i, int j) {
    GreensChecked out;
    out.value = greens_entry(box, E, i, j);
    out.eigenvalue_gap = kInf;
    int bi = block_of_site(box, i);
    if (bi < 0) return out;
    auto [lo, hi] = box.blocks[(size_t)bi];
    const double* d = box.diagonal.data() + lo;
    const int L = hi - lo;
    Envelope env = block_envelope(d, L);
    double tol = 1e-13 * box.scale();
    int N = block_count_below(d, L, E);
    if (N - 1 >= 0)
        out.eigenvalue_gap = std::min(out.eigenvalue_gap,
                                      std::fabs(E - block_eigenvalue(d, L, N - 1, env, tol)));
    if (N < L)
        out.eigenvalue_gap = std::min(out.eigenvalue_gap,
                                      std::fabs(block_eigenvalue(d, L, N, env, tol) - E));
    return out;
}

double transfer_lognorm(double x, const FrequencyModel& freq, const MonotonePotential& pot,
                        double E, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("transfer product length must be >= 1");
    std::vector<double> pts = orbit(x, freq, n);
    const double thr = std::pow(2.0, -freq.precision_bits / 2);
    double a = 1, b = 0, c = 0, d = 1, base = 0;
    for (std::int64_t j = 0; j < n; ++j) {
        double y = pts[(size_t)j];
        if (pot.singular_at_zero() && (y < thr || 1.0 - y < thr)) {
            std::ostringstream os;
            os << "transfer product hits a singular site at step " << j;
            throw std::domain_error(os.str());
        }
        double f = pot.evaluate(y);
        double na = (E - f) * a - c, nb = (E - f) * b - d;
        c = a; d = b; a = na; b = nb;
        double m = std::max(std::max(std::fabs(a), std::fabs(b)),
                            std::max(std::fabs(c), std::fabs(d)));
        if (m > 1e100) {
            a /= m; b /= m; c /= m; d /= m;
            base += std::log(m);
        }
    }
    double fro = std::sqrt(a * a + b * b + c * c + d * d);
    return (std::log(fro) + base) / (double)n;
}

void tridiag_shifted_solve(const std::vector<double>& diag, double lambda,
                           std::vector<double>& b) {
    const int n = (int)diag.size();
    if ((int)b.size() != n) throw std::invalid_argument("rhs size mismatch");
    if (n == 0) return;
    constexpr double tiny = 1e-300;
    auto guard = [](double p) { return std::fabs(p) < tiny ? (p < 0 ? -tiny : tiny) : p; };
    if (n == 1) {
        b[0] /= guard(diag[0] - lambda);
        return;
    }
    // partial-pivot LU on the tridiagonal band; the swap can push fill-in into
    // a second superdiagonal, nothing more
    std::vector<double> d(diag);
    for (double& t : d) t -= lambda;
    std::vector<double> du((size_t)n - 1, 1.0);
    std::vector<double> du2(n > 2 ? (size_t)n - 2 : 0, 0.0);
    std::vector<double> dl((size_t)n - 1, 1.0);
    std::vector<char> swapped((size_t)n - 1, 0);
    for (int i = 0; i + 1 < n; ++i) {
        if (std::fabs(d[(size_t)i]) >= std::fabs(dl[(size_t)i])) {
            double fact = dl[(size_t)i] / guard(d[(size_t)i]);
            dl[(size_t)i] = fact;
            d[(size_t)i + 1] -= fact * du[(size_t)i];
        } else {
            double fact = d[(size_t)i] / dl[(size_t)i];
            d[(size_t)i] = dl[(size_t)i];
            dl[(size_t)i] = fact;
            double temp = du[(size_t)i];
            du[(size_t)i] = d[(size_t)i + 1];
            d[(size_t)i + 1] = temp - fact * d[(size_t)i + 1];
            if (i + 2 < n) {
                du2[(size_t)i] = du[(size_t)i + 1];
                du[(size_t)i + 1] = -fact * du[(size_t)i + 1];
            }
            swapped[(size_t)i] = 1;
        }
    }
    for (int i = 0; i + 1 < n; ++i) {
        if (!swapped[(size_t)i]) {
            b[(size_t)i + 1] -= dl[(size_t)i] * b[(size_t)i];
        } else {
            double temp = b[(size_t)i];
            b[(size_t)i] = b[(size_t)i + 1];
            b[(size_t)i + 1] = temp - dl[(size_t)i] * b[(size_t)i];
        }
    }
    b[(size_t)n - 1] /= guard(d[(size_t)n - 1]);
    b[(size_t)n - 2] = (b[(size_t)n - 2] - du[(size_t)n - 2] * b[(size_t)n - 1]) / guard(d[(size_t)n - 2]);
    for (int i = n - 3; i >= 0; --i)
        b[(size_t)i] = (b[(size_t)i] - du[(size_t)i] * b[(size_t)i + 1] - du2[(size_t)i] * b[(size_t)i + 2]) /
                       guard(d[(size_t)i]);
}

} // namespace monoloc
