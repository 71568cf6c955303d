#include "monoloc/branches.hpp"

#include "monoloc/box_operator.hpp"
#include "monoloc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

namespace monoloc {

namespace {

double wrap01(double v) {
    double f = v - std::floor(v);
    if (f >= 1.0) f -= 1.0;
    return f;
}

} // namespace

int JumpPoints::interval_index(double y) const {
    if (!(y >= 0.0 && y < 1.0)) throw std::invalid_argument("interval_index needs y in [0,1)");
    auto it = std::upper_bound(values.begin(), values.end(), y);
    return (int)(it - values.begin()) - 1; // values[0] == 0 <= y guarantees >= 0
}

double JumpPoints::min_gap() const {
    if (n <= 1) return 1.0;
    double g = values[0] + 1.0 - values.back();
    for (size_t i = 0; i + 1 < values.size(); ++i)
        g = std::min(g, values[i + 1] - values[i]);
    return g;
}

JumpPoints jump_points(const FrequencyModel& freq, std::int64_t n) {
    if (n < 1) throw std::invalid_argument("jump_points needs n >= 1");
    JumpPoints jp;
    jp.n = n;
    // {-j alpha : 0 <= j < n} is the orbit window at steps -(n-1)..0 from 0
    jp.values = orbit_window(0.0, freq, -(n - 1), n);
    std::sort(jp.values.begin(), jp.values.end());
    return jp;
}

double BranchTable::eval(int k, double u) const {
    double y = wrap01(u + shifts[(size_t)k]);
    int j = jumps.interval_index(y);
    int idx = (int)((j + k) % n);
    BoxOperator box = build_box(y, freq, potential, 0, n);
    return eigenvalue_by_index(box, idx);
}

BranchTable branch_table(const FrequencyModel& freq, const MonotonePotential& pot,
                         std::int64_t n, int grid_size) {
    if (n < 1) throw std::invalid_argument("branch_table needs n >= 1");
    if (grid_size < 4 * n) {
        std::ostringstream os;
        os << "grid_size " << grid_size << " cannot resolve " << n
           << " monotonicity intervals, need >= " << 4 * n;
        throw std::invalid_argument(os.str());
    }
    BranchTable t;
    t.n = n;
    t.freq = freq;
    t.potential = pot;
    t.jumps = jump_points(freq, n);
    t.shifts.resize((size_t)n);
    t.shifts[0] = 0.0; // the index-n jump point is the index-0 one shifted by a full period
    for (std::int64_t k = 1; k < n; ++k) t.shifts[(size_t)k] = t.jumps.values[(size_t)(n - k)];
    t.grid.resize((size_t)grid_size);
    for (int g = 0; g < grid_size; ++g) t.grid[(size_t)g] = (g + 0.5) / grid_size;
    t.samples.assign((size_t)n, std::vector<double>((size_t)grid_size, 0.0));
    par::for_index(n * grid_size, [&](std::int64_t idx) {
        int k = (int)(idx / grid_size);
        int g = (int)(idx % grid_size);
        t.samples[(size_t)k][(size_t)g] = t.eval(k, t.grid[(size_t)g]);
    });
    return t;
}

BranchCheck branch_check(const BranchTable& t, double multiset_tolerance) {
    BranchCheck out;
    const double gamma = t.potential.gamma;
    out.worst_slope_defect = std::numeric_limits<double>::infinity();
    for (int k = 0; k < (int)t.n; ++k) {
        for (size_t g = 0; g + 1 < t.grid.size(); ++g) {
            double du = t.grid[g + 1] - t.grid[g];
            double slope = (t.samples[(size_t)k][g + 1] - t.samples[(size_t)k][g]) / du;
            double defect = slope - gamma;
            if (defect < out.worst_slope_defect) {
                out.worst_slope_defect = defect;
                out.witness_branch = k;
                out.witness_u = t.grid[g];
            }
        }
    }
    double slope_tol = 1e-6 * std::max(1.0, gamma);
    if (out.worst_slope_defect < -slope_tol) {
        out.pass = false;
        std::ostringstream os;
        os << "branch " << out.witness_branch << " slope defect " << out.worst_slope_defect
           << " at u = " << out.witness_u;
        out.note = os.str();
    }

    // multiset agreement: branch values pulled back to a common phase against
    // the direct spectrum at that phase
    std::vector<double> gaps(t.grid.size(), 0.0);
    par::for_index((std::int64_t)t.grid.size(), [&](std::int64_t gi) {
        double x = t.grid[(size_t)gi];
        BoxOperator box = build_box(x, t.freq, t.potential, 0, t.n);
        EigenData ed = eigenvalues(box, false);
        std::vector<double> branch_vals;
        branch_vals.reserve((size_t)t.n);
        for (int k = 0; k < (int)t.n; ++k)
            branch_vals.push_back(t.eval(k, wrap01(x - t.shifts[(size_t)k])));
        std::sort(branch_vals.begin(), branch_vals.end());
        double worst = 0;
        for (size_t i = 0; i < branch_vals.size(); ++i)
            worst = std::max(worst, std::fabs(branch_vals[i] - ed.eigenvalues[i]));
        gaps[(size_t)gi] = worst;
    });
    out.worst_multiset_gap = *std::max_element(gaps.begin(), gaps.end());
    if (out.worst_multiset_gap > multiset_tolerance) {
        out.pass = false;
        if (!out.note.empty()) out.note += "; ";
        out.note += "multiset mismatch " + std::to_string(out.worst_multiset_gap);
    }
    return out;
}

RankOneReport check_rank_one(const FrequencyModel& freq, const MonotonePotential& pot,
                             std::int64_t n, int grid_size) {
    (void)grid_size;
    RankOneReport rep;
    JumpPoints jp = jump_points(freq, n);
    rep.eps = jp.min_gap() / 8.0;
    if (n == 1) return rep; // no k >= 1 to compare, vacuous pass
    for (int j = 0; j < (int)n; ++j) {
        double b = jp.values[(size_t)j];
        BoxOperator right = build_box(wrap01(b + rep.eps), freq, pot, 0, n);
        BoxOperator left = build_box(wrap01(b - rep.eps), freq, pot, 0, n);
        EigenData er = eigenvalues(right, false);
        EigenData el = eigenvalues(left, false);
        double tol = 1e-9 * std::max(right.scale(), left.scale());
        for (int k = 1; k < (int)n; ++k) {
            double lhs = er.eigenvalues[(size_t)k];
            double rhs = el.eigenvalues[(size_t)k - 1];
            if (!(lhs >= rhs - tol)) {
                rep.pass = false;
                rep.witness_jump = j;
                rep.witness_k = k;
                rep.lhs = lhs;
                rep.rhs = rhs;
                return rep;
            }
        }
    }
    return rep;
}

IntersectionSet intersection_points(const BranchTable& t, double E) {
    IntersectionSet out;
    out.energy = E;
    const double lo_edge = 1e-11, hi_edge = 1.0 - 1e-11;
    out.points.resize((size_t)t.n);
    par::for_index(t.n, [&](std::int64_t kk) {
        int k = (int)kk;
        const std::vector<double>& row = t.samples[(size_t)k];
        size_t g = 0;
        while (g < row.size() && row[g] < E) ++g;
        double lo, hi;
        bool genuine = true;
        double z;
        if (g == 0) {
            if (t.eval(k, lo_edge) >= E) {
                genuine = false;
                z = 0.0; // branch sits at or above E on the whole circle
            } else {
                lo = lo_edge;
                hi = t.grid[0];
            }
        } else if (g == row.size()) {
            if (t.eval(k, hi_edge) < E) {
                genuine = false;
                z = 1.0; // branch never reaches E
            } else {
                lo = t.grid[row.size() - 1];
                hi = hi_edge;
            }
        } else {
            lo = t.grid[g - 1];
            hi = t.grid[g];
        }
        if (genuine) {
            while (hi - lo > 1e-10) {
                double mid = 0.5 * (lo + hi);
                if (t.eval(k, mid) >= E) hi = mid;
                else lo = mid;
            }
            z = wrap01(0.5 * (lo + hi) + t.shifts[(size_t)k]);
        }
        out.points[(size_t)k] = {z, k, genuine};
    });
    std::sort(out.points.begin(), out.points.end(),
              [](const IntersectionSet::Point& a, const IntersectionSet::Point& b) {
                  return a.z < b.z;
              });
    return out;
}

namespace {

VariationReport variation_sweep(const FrequencyModel& freq, const MonotonePotential& pot,
                                std::int64_t n, std::int64_t q, double E, int grid_size) {
    VariationReport rep;
    std::int64_t s = std::max<std::int64_t>(1, (std::int64_t)std::llround((double)n / (double)q));
    std::int64_t r = n - s * q;
    if (std::llabs(r) >= q && q > 1)
        throw std::invalid_argument("n admits no decomposition n = s q + r with |r| < q");
    rep.s = s;
    rep.r = r;
    std::vector<int> counts((size_t)grid_size, 0);
    par::for_index(grid_size, [&](std::int64_t g) {
        double x = ((double)g + 0.5) / (double)grid_size;
        BoxOperator box = build_box(x, freq, pot, 0, n);
        counts[(size_t)g] = sturm_count(box, E);
    });
    int mn = counts[0], mx = counts[0];
    size_t gmin = 0, gmax = 0;
    for (size_t g = 1; g < counts.size(); ++g) {
        if (counts[g] < mn) { mn = counts[g]; gmin = g; }
        if (counts[g] > mx) { mx = counts[g]; gmax = g; }
    }
    rep.observed_max = mx - mn;
    rep.witness_x = ((double)gmin + 0.5) / (double)grid_size;
    rep.witness_y = ((double)gmax + 0.5) / (double)grid_size;
    return rep;
}

} // namespace

VariationReport counting_variation(const FrequencyModel& freq, const MonotonePotential& pot,
                                   std::int64_t q, double E, int grid_size) {
    std::vector<std::int64_t> dens = freq.denominators_i64();
    if (std::find(dens.begin(), dens.end(), q) == dens.end())
        throw std::invalid_argument("q must be a convergent denominator of the frequency");
    VariationReport rep = variation_sweep(freq, pot, q, q, E, grid_size);
    rep.bound = 16.0;
    rep.pass = rep.observed_max <= 16;
    return rep;
}

VariationReport counting_variation_general(const FrequencyModel& freq,
                                           const MonotonePotential& pot, std::int64_t n,
                                           std::int64_t q, double E, int grid_size) {
    VariationReport rep = variation_sweep(freq, pot, n, q, E, grid_size);
    rep.bound = 64.0 * (double)rep.s + 16.0 * (double)(rep.s + std::llabs(rep.r));
    rep.pass = (double)rep.observed_max <= rep.bound;
    return rep;
}

IntersectionCountReport intersection_count_bound(const BranchTable& table, std::int64_t q,
                                                 double E, double x, double y,
                                                 double B_minus) {
    if (!(0.0 <= x && x < y && y < 1.0))
        throw std::invalid_argument("need 0 <= x < y < 1");
    IntersectionCountReport rep;
    std::int64_t n = table.n;
    rep.s = std::max<std::int64_t>(1, (std::int64_t)std::llround((double)n / (double)q));
    rep.r = n - rep.s * q;
    IntersectionSet is = intersection_points(table, E);
    for (const auto& p : is.points) {
        if (!p.genuine) continue;
        if (p.z > x && p.z < y) ++rep.count;
    }
    double sr = (double)(rep.s + std::llabs(rep.r));
    rep.bound = (double)rep.s * std::ceil((double)q * (y - x) + 1.0) + 64.0 * (double)rep.s +
                16.0 * sr;
    rep.pass = (double)rep.count <= rep.bound;

    double x0 = 0.5 * (x + y);
    double radius = B_minus / table.potential.gamma;
    for (const auto& p : is.points) {
        if (!p.genuine) continue;
        if (torus_distance(p.z - x0) <= radius) ++rep.neighborhood_count;
    }
    rep.neighborhood_bound =
        2.0 * (double)rep.s * (double)q * B_minus / table.potential.gamma + 100.0 * sr + 20.0;
    rep.neighborhood_pass = (double)rep.neighborhood_count <= rep.neighborhood_bound;
    return rep;
}

} // namespace monoloc
