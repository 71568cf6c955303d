#include "monoloc/spectral.hpp"

#include "monoloc/box_operator.hpp"
#include "monoloc/ldt.hpp"
#include "monoloc/parallel.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

namespace monoloc {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// antiderivative of log|t - E|, continuous through t = E
double log_antideriv(double t, double E) {
    double u = t - E;
    if (u == 0.0) return 0.0;
    return u * (std::log(std::fabs(u)) - 1.0);
}

double segment_log_integral(double a, double b, double E) {
    return log_antideriv(b, E) - log_antideriv(a, E);
}

struct MassTerm {
    double a, b;  // support; a == b is a point mass
    double mass;
};

// IDS table as a measure: linear segments, explicit point masses for duplicate
// grid energies, and boundary masses for truncated windows
std::vector<MassTerm> ids_measure(const IDSTable& tab) {
    std::vector<MassTerm> terms;
    const auto& g = tab.energy_grid;
    const auto& v = tab.values;
    if (v.front() > 0) terms.push_back({g.front(), g.front(), v.front()});
    for (size_t i = 0; i + 1 < g.size(); ++i) {
        double dN = v[i + 1] - v[i];
        if (dN <= 0) continue;
        terms.push_back({g[i], g[i + 1], dN});
    }
    if (v.back() < 1.0) terms.push_back({g.back(), g.back(), 1.0 - v.back()});
    return terms;
}

} // namespace

CutoffPair make_cutoffs(double B_minus, double B_plus) {
    if (!(0.0 < B_minus && B_minus < 1.0))
        throw std::invalid_argument("B_minus must lie in (0,1)");
    if (!(B_plus > 10.0)) throw std::invalid_argument("B_plus must exceed 10");
    return {B_minus, B_plus};
}

double IDSTable::value_at(double E) const {
    const auto& g = energy_grid;
    if (E <= g.front()) return values.front();
    if (E >= g.back()) return values.back();
    auto it = std::upper_bound(g.begin(), g.end(), E);
    size_t i = (size_t)(it - g.begin()) - 1;
    double a = g[i], b = g[i + 1];
    if (b == a) return values[i + 1];
    double t = (E - a) / (b - a);
    return values[i] + t * (values[i + 1] - values[i]);
}

double IDSTable::inverse_at(double x) const {
    const auto& v = values;
    const auto& g = energy_grid;
    if (x <= v.front()) return g.front();
    if (x >= v.back()) return g.back();
    auto it = std::lower_bound(v.begin(), v.end(), x);
    size_t i = (size_t)(it - v.begin());
    if (v[i] == x || i == 0) return g[i];
    double va = v[i - 1], vb = v[i];
    if (vb == va) return g[i];
    double t = (x - va) / (vb - va);
    return g[i - 1] + t * (g[i] - g[i - 1]);
}

double IDSTable::max_slope() const {
    double m = 0;
    for (size_t i = 0; i + 1 < energy_grid.size(); ++i) {
        double dE = energy_grid[i + 1] - energy_grid[i];
        if (dE <= 0) continue;
        m = std::max(m, (values[i + 1] - values[i]) / dE);
    }
    return m;
}

IDSTable make_synthetic_ids(std::vector<double> energy_grid, std::vector<double> values) {
    if (energy_grid.size() != values.size() || energy_grid.size() < 2)
        throw std::invalid_argument("synthetic table needs matching grids of size >= 2");
    for (size_t i = 0; i + 1 < energy_grid.size(); ++i) {
        if (energy_grid[i + 1] < energy_grid[i])
            throw std::invalid_argument("energy grid must be sorted");
        if (values[i + 1] < values[i])
            throw std::invalid_argument("values must be non-decreasing");
    }
    IDSTable t;
    t.energy_grid = std::move(energy_grid);
    t.values = std::move(values);
    t.note = "synthetic";
    return t;
}

IDSTable ids_build(const FrequencyModel& freq, const MonotonePotential& pot, std::int64_t n,
                   const std::vector<double>& energy_grid, double x0) {
    if (energy_grid.size() < 2) throw std::invalid_argument("energy grid needs >= 2 points");
    for (size_t i = 0; i + 1 < energy_grid.size(); ++i)
        if (energy_grid[i + 1] <= energy_grid[i])
            throw std::invalid_argument("energy grid must be strictly increasing");
    IDSTable t;
    if (std::isnan(x0)) x0 = 0.5 * (std::sqrt(5.0) - 1.0);
    t.x0 = x0;
    t.n = n;
    ScaleChoice sc = choose_scale(n, freq);
    t.q = sc.q;
    t.s = sc.s;
    t.r = sc.r;
    t.error_bound = 4.0 * (double)std::llabs(sc.r) / ((double)sc.s * (double)sc.q) +
                    40.0 / (double)sc.q;
    t.energy_grid = energy_grid;
    t.values.assign(energy_grid.size(), 0.0);
    BoxOperator box = build_box(x0, freq, pot, 0, n);
    par::for_index((std::int64_t)energy_grid.size(), [&](std::int64_t i) {
        t.values[(size_t)i] = (double)sturm_count(box, energy_grid[(size_t)i]) / (double)n;
    });
    double lip = 1.0 / std::max(pot.gamma, 1e-12);
    for (size_t i = 0; i + 1 < energy_grid.size(); ++i) {
        double dE = energy_grid[i + 1] - energy_grid[i];
        if (t.values[i + 1] - t.values[i] > lip * dE + t.error_bound) {
            t.coarse_grid_flag = true;
            std::ostringstream os;
            os << "grid too coarse near E = " << energy_grid[i] << ": step "
               << t.values[i + 1] - t.values[i] << " exceeds " << lip * dE + t.error_bound;
            t.note = os.str();
            break;
        }
    }
    return t;
}

InverseCheckReport ids_inverse_check(const IDSTable& table, const MonotonePotential& pot) {
    InverseCheckReport rep;
    rep.bound = 2.0 + 2.0 * table.error_bound + 0.05;
    double lo = std::max(0.01, table.values.front() + 0.01);
    double hi = std::min(0.99, table.values.back() - 0.01);
    if (hi <= lo) {
        rep.pass = false;
        return rep;
    }
    const int count = 101;
    for (int i = 0; i < count; ++i) {
        double x = lo + (hi - lo) * (double)i / (count - 1);
        double gap = std::fabs(table.inverse_at(x) - pot.evaluate(x));
        if (gap > rep.observed_max) {
            rep.observed_max = gap;
            rep.witness_x = x;
        }
    }
    rep.pass = rep.observed_max <= rep.bound;
    return rep;
}

double thouless(const IDSTable& table, double E, double* quadrature_error) {
    double total = 0;
    for (const MassTerm& m : ids_measure(table)) {
        if (m.a == m.b) {
            double u = std::fabs(E - m.a);
            total += m.mass * (u == 0.0 ? -kInf : std::log(u));
        } else {
            total += m.mass / (m.b - m.a) * segment_log_integral(m.a, m.b, E);
        }
    }
    if (quadrature_error) {
        double h = 0, lip = table.max_slope();
        for (size_t i = 0; i + 1 < table.energy_grid.size(); ++i) {
            double a = table.energy_grid[i], b = table.energy_grid[i + 1];
            if (b - a <= 0) continue;
            if (b >= E - 1.0 && a <= E + 1.0) h = std::max(h, b - a);
        }
        *quadrature_error = (h > 0 && h < 2.0) ? lip * h * (1.0 + std::log(2.0 / h)) : lip * h;
    }
    return total;
}

LyapunovTable lyapunov_build(const IDSTable& table) {
    LyapunovTable lt;
    lt.energy_grid = table.energy_grid;
    lt.values.assign(lt.energy_grid.size(), 0.0);
    std::vector<double> errs(lt.energy_grid.size(), 0.0);
    par::for_index((std::int64_t)lt.energy_grid.size(), [&](std::int64_t i) {
        lt.values[(size_t)i] = thouless(table, lt.energy_grid[(size_t)i], &errs[(size_t)i]);
    });
    lt.quadrature_error = *std::max_element(errs.begin(), errs.end());
    return lt;
}

double thouless_banded(const IDSTable& table, double E, const CutoffPair& cutoffs) {
    const double bm = cutoffs.B_minus, bp = cutoffs.B_plus;
    double banded = 0;
    for (const MassTerm& m : ids_measure(table)) {
        if (m.a == m.b) {
            double u = std::fabs(E - m.a);
            if (u >= bm && u <= bp) banded += m.mass * std::log(u);
            continue;
        }
        double slope = m.mass / (m.b - m.a);
        const double windows[2][2] = {{E - bp, E - bm}, {E + bm, E + bp}};
        for (const auto& w : windows) {
            double aa = std::max(m.a, w[0]), bb = std::min(m.b, w[1]);
            if (bb > aa) banded += slope * segment_log_integral(aa, bb, E);
        }
    }
    return banded;
}

double l_corr(const IDSTable& table, double E, const CutoffPair& cutoffs) {
    return std::fabs(thouless(table, E) - thouless_banded(table, E, cutoffs));
}

FloorCheckReport lyapunov_floor_check(const LyapunovTable& table, double gamma,
                                      double tolerance) {
    FloorCheckReport rep;
    rep.floor = std::max(0.0, std::log(gamma / (2.0 * std::exp(1.0))));
    rep.observed_min = kInf;
    for (size_t i = 0; i < table.values.size(); ++i) {
        if (table.values[i] < rep.observed_min) {
            rep.observed_min = table.values[i];
            rep.witness_E = table.energy_grid[i];
        }
    }
    rep.pass = rep.observed_min >= rep.floor - tolerance;
    return rep;
}

std::vector<double> linear_grid(double lo, double hi, int count) {
    if (count < 2 || !(hi > lo)) throw std::invalid_argument("bad grid request");
    std::vector<double> g((size_t)count);
    for (int i = 0; i < count; ++i)
        g[(size_t)i] = lo + (hi - lo) * (double)i / (count - 1);
    return g;
}

std::vector<double> default_energy_grid(const MonotonePotential& pot, int count) {
    double lo = pot.inf_value();
    if (!std::isfinite(lo))
        throw std::invalid_argument(
            "potential is unbounded below: an explicit energy window is required");
    return linear_grid(lo - 3.0, pot.sup_value() + 3.0, count);
}

} // namespace monoloc
