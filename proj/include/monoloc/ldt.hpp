#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "monoloc/arithmetic.hpp"
#include "monoloc/box_operator.hpp"
#include "monoloc/branches.hpp"
#include "monoloc/potential.hpp"
#include "monoloc/signed_log.hpp"
#include "monoloc/spectral.hpp"

namespace monoloc {

// n = s*q + r with q a convergent denominator, |r| <= sqrt(n), q maximal.
struct ScaleChoice {
    std::int64_t n = 0;
    std::int64_t q = 0;
    std::int64_t s = 0;
    std::int64_t r = 0; // signed
};

// Deterministic: prefers larger q, then smaller |r|, then positive r.
// q = 1 always admits r = 0, so this never fails.
ScaleChoice choose_scale(std::int64_t n, const FrequencyModel& freq);

// B_minus = q^{-(2*C_d - 1)}, B_plus = q. Requires q > 10 so that the
// cutoff ordering 0 < B_minus < 1 < 10 < B_plus holds.
CutoffPair cutoffs_for_scale(const ScaleChoice& scale, double C_d);

// Characteristic determinant factored by |lambda - E| against the cutoffs.
// Ties land in the mid class (closed band). Dirichlet deltas from singular
// sites carry no factor, matching the block determinant convention.
struct DeterminantSplit {
    SignedLog p_minus = SignedLog::one();
    SignedLog p_mid = SignedLog::one();
    SignedLog p_plus = SignedLog::one();
    int count_minus = 0, count_mid = 0, count_plus = 0;
    CutoffPair cutoffs{};
    // |log| gap between the re-multiplied split and the recurrence
    // determinant; meaningful only when no eigenvalue sits near E
    double residual_log = 0;
};

DeterminantSplit split_determinant(const BoxOperator& box, double E,
                                   const CutoffPair& cutoffs);

struct BoundCheck {
    double observed = 0;
    double bound = 0;
    bool pass = false;
};

struct LDTReport {
    ScaleChoice scale;
    CutoffPair cutoffs{};
    double C_d = 0;
    DeterminantSplit split;
    BoundCheck mid_vs_density; // per-site log of mid factors vs banded integral
    BoundCheck minus_count;    // close-factor count
    BoundCheck plus_count;     // far-factor count via the log moment
    bool plus_vacuous = false; // cutoff exceeds the potential range entirely
    double plus_log_lower = 0, plus_log_upper = 0;
    bool plus_sandwich_pass = false;
    int plus_diag_lower_count = 0, plus_diag_upper_count = 0;
    bool plus_count_sandwich_pass = false;
    bool pass = false;
    std::string note;
};

// The four determinant bounds at one scale. The box must have been built
// with n = scale.n sites.
LDTReport ldt_verify(const BoxOperator& box, double E, const ScaleChoice& scale,
                     const IDSTable& ids, const MonotonePotential& pot,
                     double C_d = 4.0);

struct UniformUpperReport {
    double observed_log = 0; // log |p_minus * p_mid|
    double bound = 0;        // n L (1 + L_corr + 300 (1/q + |r|/n) log(B+/B-))
    double L = 0;
    double L_corr = 0;
    bool pass = false;
};

UniformUpperReport uniform_upper_check(const BoxOperator& box, double E,
                                       const ScaleChoice& scale, const IDSTable& ids,
                                       double C_d = 4.0);

// (d/2)^t * t! for points with pairwise separation >= d (d taken as the
// minimum observed gap). Any monic degree-t polynomial reaches this on one
// of the points; the randomized companion check lives in the tests.
double lagrange_bound(const std::vector<double>& points, int degree);

struct SamplingLemmaResult {
    double chosen_point = 0;
    int t = 0;        // intersection points inside the interval
    double d = 0;     // pairwise separation used
    double bound_log = 0; // log of gamma^t (d/2)^t t!
    double observed_log_p_minus = 0;
    bool verified = false;
    std::vector<double> per_point_log_p_minus;
};

// Small-denominator lower bound on an interval of phases. Preconditions are
// checked and rejected with distinct messages: interval length vs 1/(10
// gamma), pairwise separation, and clearance B_minus/gamma of intersection
// points outside the interval.
SamplingLemmaResult sampling_lemma_bound(double I_lo, double I_hi,
                                         const std::vector<double>& sampling_phases,
                                         const IntersectionSet& intersections,
                                         double gamma, const FrequencyModel& freq,
                                         const MonotonePotential& pot, std::int64_t n,
                                         double E, const CutoffPair& cutoffs);

enum class Regime {
    dio_base,   // Diophantine scale, one-denominator construction
    dio_dio,    // Liouville scale, per-point Diophantine, s small
    lio_dio,    // Liouville scale, per-point Diophantine, s large
    nonres_dio, // non-resonant point, per-point scale, s small
    nonres_lio, // non-resonant point, per-point scale, s large
    resonant,   // inside a resonance zone around ell * q_k
    origin_zone,  // |m| <= b_k: excluded by every construction
    unclassified,
};

const char* regime_name(Regime r);

struct PointRegime {
    Regime kind = Regime::unclassified;
    std::int64_t m = 0;
    std::int64_t dist = 0;    // dist(m, q_k Z)
    std::int64_t ell = 0;     // zone index, resonant only
    std::int64_t q_prime = 0; // selected smaller denominator
    std::int64_t s = 0;
    std::int64_t s_prime = 0;
    std::string note;
};

struct ResonanceZone {
    std::int64_t ell = 0;
    std::int64_t lo = 0, hi = 0; // [ell q_k - b_k, ell q_k + b_k]
};

struct ResonanceMap {
    int k = 0;
    double tau = 0;
    double sigma = 0;
    double C_d = 0;
    std::int64_t q_k = 0;
    bigint q_k1;
    double q_k1_log = 0;  // log q_{k+1}
    double beta_k = 0;    // log(q_{k+1}) / q_k
    std::int64_t b_k = 0; // floor(tau q_k)
    bool liouville = false; // q_{k+1} > q_k^{C_d}
    std::int64_t ell_max = 0; // floor(q_{k+1} / (10 q_k)), clamped to int64
    std::vector<ResonanceZone> zones; // materialized up to |ell| <= 64

    // scale pair against tau q_k, shared by the whole-window constructions
    bool global_valid = false;
    int global_k0 = -1;
    std::int64_t global_q_prime = 0, global_s = 0, global_s_prime = 0;

    FrequencyModel freq;

    bool resonant(std::int64_t m) const;
    PointRegime classify(std::int64_t m) const;
};

// tau must lie in (0, 1/8); zones and the per-regime scale data are fixed
// at construction.
ResonanceMap resonance_map(const FrequencyModel& freq, int k, double tau,
                           double C_d = 4.0, double sigma = 0.2);

struct SamplingCluster {
    double lo = 0, hi = 0;
    int count = 0;
};

struct SamplingSet {
    Regime regime = Regime::unclassified;
    std::vector<std::int64_t> J; // sorted, distinct
    std::int64_t n_det = 0;      // determinant length the set certifies
    double expected_separation = 0;
    double observed_min_separation = 0;
    int t_for_bound = 0;
    double d_for_bound = 0;
    std::vector<SamplingCluster> clusters;
    double intra_pair_distance = 0; // resonant: |ell| * ||q_k alpha||
    std::string note;
};

// The translated-copies shift set for one point m in the given regime.
// Cardinality and pairwise orbit separations are verified exactly in
// integer arithmetic; violations throw rather than degrade.
SamplingSet build_sampling_set(std::int64_t m, Regime regime, const ResonanceMap& map);

struct GoodInterval {
    std::int64_t n1 = 0, n2 = 0;
    double mu = 0;    // empirical decay exponent of the Green entries
    double sigma = 0; // interior margin as a fraction of the length
    // worst of log|G| + mu * dist over the checked sites, per side (<= 0)
    double cert_left_worst = 0, cert_right_worst = 0;
    std::int64_t covered_lo = 0, covered_hi = 0;
    bool certified = false;
};

// Direct Green-decay certification of the window [n1, n2] at base phase x.
GoodInterval certify_interval(double x, const FrequencyModel& freq,
                              const MonotonePotential& pot, std::int64_t n1,
                              std::int64_t n2, double E, double sigma);

struct ShiftDiagnostic {
    std::int64_t j = 0;
    double log_p_minus = 0;
    int count_minus = 0;
    bool covers_m = false;
    bool passed = false;
};

struct RnEstimate {
    double value = 0;
    double root_term = 0, lcorr_term = 0, logq_term = 0, remainder_term = 0;
    std::string note; // records the omitted potential-dependent C/q term
};

RnEstimate scale_error_estimate(const ScaleChoice& scale, const IDSTable& ids,
                                double E, double C_d);

struct GoodIntervalSearch {
    bool found = false;
    GoodInterval interval;
    std::int64_t chosen_shift = 0;
    double log_p_minus = 0;
    double sampling_bound_log = 0;
    double reference_L = 0;
    RnEstimate rn;
    bool ldt_slack_flag = false; // bound passed but certification failed
    std::vector<ShiftDiagnostic> shifts; // congestion map on failure
    std::string failure;
    SamplingSet set;
};

// Scans the sampling shifts for m, keeps those whose window covers m with
// the sigma margin, picks the largest close-factor product among the ones
// passing the small-denominator bound, then certifies the Green decay of
// the selected window by direct evaluation. Never throws on regime or
// scale problems; they come back as failure diagnostics.
GoodIntervalSearch find_good_interval(double x, std::int64_t m, double E,
                                      const PointRegime& regime, const ResonanceMap& map,
                                      const IDSTable& ids, const MonotonePotential& pot);

} // namespace monoloc
