#pragma once

#include "monoloc/arithmetic.hpp"
#include "monoloc/potential.hpp"

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

namespace monoloc {

// determinant cutoff parameters, standing assumption 0 < B_minus < 1 < 10 < B_plus
struct CutoffPair {
    double B_minus = 0;
    double B_plus = 0;
    double B_plus_prime() const { return B_plus + 4.0; }
};
CutoffPair make_cutoffs(double B_minus, double B_plus);

// integrated density of states sampled at one phase: values are N_n(x0, E)/n
// on a sorted energy grid. Duplicate grid energies encode point masses, which
// the Thouless integral treats analytically.
struct IDSTable {
    std::vector<double> energy_grid;
    std::vector<double> values;
    std::int64_t n = 0, q = 0, s = 0, r = 0; // build scale, n = s q + r
    double error_bound = 0;                  // 4|r|/(s q) + 40/q
    double x0 = 0;
    bool coarse_grid_flag = false;
    std::string note;

    double value_at(double E) const;   // piecewise-linear, clamped outside the grid
    double inverse_at(double x) const; // smallest grid-interpolated E with N(E) >= x
    double max_slope() const;          // observed Lipschitz constant
};

IDSTable make_synthetic_ids(std::vector<double> energy_grid, std::vector<double> values);

// counting-function IDS at a single phase; scale data (q, s, r) recorded from
// the denominator selection for n. NaN x0 selects the golden-ratio offset.
IDSTable ids_build(const FrequencyModel& freq, const MonotonePotential& pot, std::int64_t n,
                   const std::vector<double>& energy_grid,
                   double x0 = std::numeric_limits<double>::quiet_NaN());

struct InverseCheckReport {
    double observed_max = 0;
    double bound = 0;
    bool pass = false;
    double witness_x = 0;
};
// the IDS inverted back through the potential moves each level by at most 2
// (hopping norm), plus the build error slack
InverseCheckReport ids_inverse_check(const IDSTable& table, const MonotonePotential& pot);

// L(E) as the log-potential of the IDS measure, evaluated segment by segment
// in closed form through the logarithmic singularity
double thouless(const IDSTable& table, double E, double* quadrature_error = nullptr);

struct LyapunovTable {
    std::vector<double> energy_grid;
    std::vector<double> values;
    double quadrature_error = 0;
};
LyapunovTable lyapunov_build(const IDSTable& table);

// the Thouless integral with |E-E'| forced to 1 outside [B_minus, B_plus]
double thouless_banded(const IDSTable& table, double E, const CutoffPair& cutoffs);

// |L(E) - truncated L(E)|; shrinks to 0 as the band widens
double l_corr(const IDSTable& table, double E, const CutoffPair& cutoffs);

struct FloorCheckReport {
    double observed_min = 0;
    double floor = 0;
    bool pass = false;
    double witness_E = 0;
};
// L(E) >= max(0, log(gamma/2e)) on the grid, within tolerance
FloorCheckReport lyapunov_floor_check(const LyapunovTable& table, double gamma,
                                      double tolerance = 0.02);

std::vector<double> linear_grid(double lo, double hi, int count);
// [inf f - 3, sup f + 3]; throws for unbounded-below potentials (user must pick a window)
std::vector<double> default_energy_grid(const MonotonePotential& pot, int count = 1024);

} // namespace monoloc
