#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include "monoloc/arithmetic.hpp"
#include "monoloc/ldt.hpp"
#include "monoloc/potential.hpp"

namespace monoloc {

struct GoodRecord {
    std::int64_t n1 = 0, n2 = 0; // window around the point
    double mu_m = 0;             // decay exponent valid on it
};

// One decaying window per covered point, all inside the outer frame, with
// uniform floors. The floors must satisfy e^{mu sigma L} > 2 so that every
// path step costs more than log 2 and path sums converge geometrically.
struct GoodIntervalCollection {
    std::int64_t outer_lo = 0, outer_hi = 0;
    std::int64_t inner_lo = 0, inner_hi = 0;
    double mu = 0;
    double sigma = 0;
    std::int64_t L = 0;
    std::vector<GoodRecord> records; // index m - inner_lo

    const GoodRecord& at(std::int64_t m) const;
};

// throws with the first violated rule spelled out
void validate_collection(const GoodIntervalCollection& col);

struct Path {
    std::vector<std::int64_t> vertices; // m_0 .. m_p
    double weight = 0;                  // sum of mu_j (|m_{j+1} - m_j| - 1)
    std::int64_t span = 0;              // sum of |m_{j+1} - m_j|
    int length() const { return (int)vertices.size() - 1; }
};

// |psi(m)| <= e^{-mu (m - n1)} |psi(n1 - 1)| + e^{-mu (n2 - m)} |psi(n2 + 1)|
// evaluated in the log domain; psi_log holds log|psi| from site `base` on.
// The sigma margin of m inside [n1, n2] is a precondition, not a result.
bool psi_regular(const std::vector<double>& psi_log, std::int64_t base, std::int64_t m,
                 std::int64_t n1, std::int64_t n2, double mu, double sigma);

// All terminating paths from m with weight <= cutoff, depth-first with weight
// pruning. Sorted by vertex sequence. Exceeding node_budget throws: the
// caller asked for an enumeration that is exponentially large.
std::vector<Path> enumerate_paths(const GoodIntervalCollection& col, std::int64_t m,
                                  double weight_cutoff, std::int64_t node_budget = 2000000);

struct TerminatingBoundReport {
    double lhs_log = 0;      // log |psi(m)|
    double path_sum_log = 0; // log sum over terminating paths e^{-w} |psi(end)|
    double tail_log = 0;     // residual mass of paths longer than max_length
    double rhs_log = 0;
    int max_length = 0;
    std::size_t path_count = 0;
    bool pass = false;
};

// The path-sum upper bound on |psi(m)|, with the enumeration truncated at a
// length where the geometric tail drops below 1e-12 of scale. Requires psi
// to be regular at every covered point and says which point fails otherwise.
TerminatingBoundReport verify_terminating_bound(const GoodIntervalCollection& col,
                                                const std::vector<double>& psi_log,
                                                std::int64_t psi_base, std::int64_t m);

enum class Side { left, right };

struct MinWeightResult {
    bool reachable = false;
    double weight = std::numeric_limits<double>::infinity();
    Path witness;
    // companion sum over the same side, compared against the dominating
    // exponent (1 - a) min with a = 16 (1 + mu) log(sigma L) / (mu sigma L).
    // Only evaluated when a_small; otherwise side_sum_log is NaN and
    // dominating_pass stays false, since the comparison is not claimed there.
    double a = 0;
    bool a_small = false; // a <= 1/100, the regime where the bound is claimed
    double side_sum_log = 0;
    double dominating_bound_log = 0;
    bool dominating_pass = false;
};

MinWeightResult min_weight(const GoodIntervalCollection& col, std::int64_t m, Side side);

struct AnnulusFit {
    int k = 0;
    std::int64_t lo = 0, hi = 0; // |m| range actually used
    double slope = 0;            // positive decay rate of log|psi| per site
    double intercept = 0;
    int points = 0;
    bool liouville = false;
    double predicted = 0; // L for Diophantine windows, L - beta_k for Liouville
};

struct ResonantPeak {
    std::int64_t ell = 0;
    double log_r = 0;
    std::int64_t argmax = 0;
    bool above_floor = false;
};

struct DecayProfile {
    bool conclusive = false;
    std::string note;
    double energy = 0;
    double ipr = 0;              // inverse participation ratio of the eigenvector
    std::int64_t center = 0;     // absolute site of max |psi|
    std::int64_t lo = 0, hi = 0; // centered coordinate range
    std::vector<double> log_psi; // index m - lo, normalized at the center pair
    std::vector<AnnulusFit> annuli;
    int resonant_k = -1; // largest Liouville scale analyzed, -1 if none
    double beta_k = 0;
    std::int64_t res_q_k = 0, res_b_k = 0;
    std::vector<ResonantPeak> peaks;
    double noise_floor = -30;

    double value_at(std::int64_t m) const; // log|psi|, -inf outside
};

// Eigenpair nearest E_target on a centered box, recentered at its maximum,
// with per-annulus decay fits between consecutive denominator scales and
// resonant-zone peak extraction at the top Liouville scale. box_size 0
// derives a default from the requested k_max. L_reference feeds the
// predicted column; NaN leaves it unset.
DecayProfile decay_profile(const FrequencyModel& freq, const MonotonePotential& pot,
                           int k_max, double E_target,
                           double x0 = 0.6180339887498949,
                           std::int64_t box_size = 0, double tau = 0.05, double C_d = 4.0,
                           double L_reference = std::numeric_limits<double>::quiet_NaN(),
                           double ipr_min = 0.05, double noise_floor = -30.0);

// least-squares decay rate of log|psi| on |m| over [lo, hi], both sides,
// skipping resonant zones when the profile carries them
AnnulusFit fit_decay_window(const DecayProfile& profile, std::int64_t lo, std::int64_t hi);

struct BetweenZoneCheck {
    std::int64_t ell = 0;
    double mu_hat = 0; // largest exponent the two-peak envelope supports
    int points = 0;
    bool pass = false;
};

struct PeakTrendRow {
    std::int64_t ell = 0;
    double observed_log_r = 0;
    double predicted_log_r = 0; // -( (L - beta_k) ell q_k + ell log ell )
    double slack = 0;           // observed - predicted
    bool above_floor = false;
};

struct ResonantRecursionReport {
    bool conclusive = false;
    std::string note;
    bool tau_small_ok = false; // L (1 - 2 tau) - beta_k > 0
    double mu_hat = 0;         // min over between-zone stretches
    double L_reference = 0;
    std::vector<BetweenZoneCheck> between;
    std::vector<PeakTrendRow> trend;
    bool pass = false;
};

// Peak-to-peak decay structure of a profile against the resonance zones:
// between-zone two-sided envelope with its empirical exponent, and the peak
// sequence against the predicted weights.
ResonantRecursionReport resonant_recursion_check(const DecayProfile& profile,
                                                 const ResonanceMap& map, double L_E,
                                                 double beta_k, double tau);

} // namespace monoloc
