#pragma once

#include "monoloc/arithmetic.hpp"
#include "monoloc/potential.hpp"

#include <cstdint>
#include <string>
#include <vector>

namespace monoloc {

// phases {-j alpha mod 1 : 0 <= j < n} where a diagonal entry of the n-site
// box jumps; between consecutive jump points every diagonal entry moves
// monotonically with the phase
struct JumpPoints {
    std::int64_t n = 0;
    std::vector<double> values; // sorted, values[0] == 0
    // index j with values[j] <= y < values[j+1] (values[n] meaning values[0]+1)
    int interval_index(double y) const;
    double min_gap() const;
};

JumpPoints jump_points(const FrequencyModel& freq, std::int64_t n);

// gamma-monotone eigenvalue branches: the k-th branch evaluated at u is the
// ((j+k) mod n)-th eigenvalue of the box at phase u + shift_k, where j is the
// jump interval containing that phase. Sampled on a uniform grid; exact
// evaluation stays available for bisection refinement.
struct BranchTable {
    std::int64_t n = 0;
    FrequencyModel freq;
    MonotonePotential potential;
    std::vector<double> grid;                 // branch arguments, uniform offset grid
    std::vector<std::vector<double>> samples; // [branch][grid]
    std::vector<double> shifts;               // shift_k = jump value with index n-k mod n
    JumpPoints jumps;

    double eval(int k, double u) const; // exact, via one targeted eigenvalue solve
};

struct BranchCheck {
    bool pass = true;
    double worst_slope_defect = 0; // min over branches/pairs of slope - gamma
    int witness_branch = -1;
    double witness_u = 0;
    double worst_multiset_gap = 0; // max |sorted branch values - direct spectrum|
    std::string note;
};

BranchTable branch_table(const FrequencyModel& freq, const MonotonePotential& pot,
                         std::int64_t n, int grid_size);
// grid-level gamma-monotonicity of every branch plus multiset agreement with
// the direct spectrum at every grid phase
BranchCheck branch_check(const BranchTable& table, double multiset_tolerance = 1e-8);

struct RankOneReport {
    bool pass = true;
    int witness_jump = -1;
    int witness_k = -1;
    double lhs = 0, rhs = 0;
    double eps = 0;
};
// interlacing across each jump: the diagonal jump is a rank-one negative
// perturbation, so E_k just right of a jump dominates E_{k-1} just left of it
RankOneReport check_rank_one(const FrequencyModel& freq, const MonotonePotential& pot,
                             std::int64_t n, int grid_size);

struct IntersectionSet {
    double energy = 0;
    struct Point {
        double z;     // phase of the level crossing, in [0,1]
        int branch;
        bool genuine; // false when the branch never crosses and z is the endpoint convention
    };
    std::vector<Point> points; // sorted by z
};
// per-branch monotone bisection to 1e-10 of phase; a branch entirely below E
// resolves to z = 1 and entirely above to z = 0 (endpoints identified)
IntersectionSet intersection_points(const BranchTable& table, double E);

struct VariationReport {
    int observed_max = 0;
    double bound = 0;
    bool pass = false;
    std::int64_t s = 0, r = 0;
    double witness_x = 0, witness_y = 0; // phases attaining min and max count
};
// max over a phase grid of the spread of the eigenvalue counting function
// N_q(x, E) for a convergent denominator q; the bound is the fixed constant 16
VariationReport counting_variation(const FrequencyModel& freq, const MonotonePotential& pot,
                                   std::int64_t q, double E, int grid_size);
// same sweep at general n = s q + r, bound 64 s + 16 (s + |r|)
VariationReport counting_variation_general(const FrequencyModel& freq,
                                           const MonotonePotential& pot, std::int64_t n,
                                           std::int64_t q, double E, int grid_size);

struct IntersectionCountReport {
    int count = 0;            // crossings with z in (x, y)
    double bound = 0;         // s ceil(q(y-x)+1) + 64 s + 16 (s+|r|)
    bool pass = false;
    int neighborhood_count = 0;    // crossings within B_minus/gamma of the midpoint
    double neighborhood_bound = 0; // 2 s q B_minus/gamma + 100 (s+|r|) + 20
    bool neighborhood_pass = false;
    std::int64_t s = 0, r = 0;
};
IntersectionCountReport intersection_count_bound(const BranchTable& table, std::int64_t q,
                                                 double E, double x, double y,
                                                 double B_minus);

} // namespace monoloc
