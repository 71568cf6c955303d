#pragma once

#include <boost/multiprecision/cpp_int.hpp>
#include <cstdint>
#include <functional>
#include <stdexcept>
#include <string>
#include <vector>

namespace monoloc {

using bigint = boost::multiprecision::cpp_int;

// thrown when a request exceeds the certified precision budget (CLI exit 3)
struct precision_error : std::runtime_error {
    using std::runtime_error::runtime_error;
};

double log_bigint(const bigint& v); // natural log of a positive big integer

struct ContinuedFraction {
    std::vector<bigint> coefficients;        // a_0..a_K, a_0 >= 0, a_k >= 1 for k >= 1
    std::vector<bigint> convergent_numerators;   // p_0..p_K
    std::vector<bigint> convergent_denominators; // q_0..q_K
    int order() const { return (int)coefficients.size() - 1; } // K
};

ContinuedFraction cf_from_coefficients(const std::vector<bigint>& coeffs);
ContinuedFraction cf_from_coefficients(const std::vector<std::int64_t>& coeffs);

struct BetaEstimateRow {
    int k;
    double ratio;       // log(q_{k+1}) / q_k
    double running_max;
};
// running estimate of the irrationality exponent; a limsup in principle, so any
// finite coefficient window only bounds it and the report says "estimate"
std::vector<BetaEstimateRow> beta_estimate(const ContinuedFraction& cf);

// The frequency is the exact rational p_K/q_K of the last supplied convergent,
// held as a fixed-point integer round(2^B * p_K/q_K). Orbits computed from it
// carry a certified absolute error of j*2^-(B+1) at step j.
struct FrequencyModel {
    ContinuedFraction cf;
    int precision_bits = 256;
    bigint fixed_value;                 // in [0, 2^B)
    std::vector<BetaEstimateRow> beta_running;

    double value() const;
    std::int64_t max_orbit_length() const;
    // convergent denominators that fit in int64, ascending
    std::vector<std::int64_t> denominators_i64() const;
    int order() const { return cf.order(); }
};

FrequencyModel make_frequency(const std::vector<bigint>& coeffs, int precision_bits = 256);
FrequencyModel make_frequency(const std::vector<std::int64_t>& coeffs, int precision_bits = 256);

double torus_distance(double y); // dist(y, Z), in [0, 1/2]

// {x + j*alpha} for j = 0..n-1; aborts (precision_error) past the budget
std::vector<double> orbit(double x, const FrequencyModel& freq, std::int64_t n);

// {x + j*alpha} for j = h..h+n-1, h may be negative; budget covers |h| + n
std::vector<double> orbit_window(double x, const FrequencyModel& freq,
                                 std::int64_t h, std::int64_t n);

// exact ||j * p_K/q_K|| evaluated in integer arithmetic, returned as double
double torus_norm_multiple(const FrequencyModel& freq, const bigint& j);

struct ThreeDistanceReport {
    int k = 0;
    bool pass = false;
    bool degenerate = false;     // q_k <= 2: orbit too short for the two-gap structure
    int gap_value_count = 0;     // distinct gap values observed
    double gap_small = 0, gap_large = 0;
    double norm_q_prev = 0, norm_q_cur = 0; // ||q_{k-1} alpha||, ||q_k alpha||
    std::string failure;         // which bound failed, with witness; empty on pass
};
// checks the two-gap structure of {j alpha : 0 <= j < q_k} and the sandwich
// 1/(2 q_k) <= ||q_{k-1} alpha|| < 1/q_k < gap_large <= 2/q_k.
// Requires 1 <= k <= order()-1: at k = order() the rational truncation sits
// exactly on the excluded boundary case.
ThreeDistanceReport three_distance_check(const FrequencyModel& freq, int k);

struct DiscrepancyReport {
    std::int64_t n = 0;
    double value = 0;     // sup_t |#{y_i <= t}/n - t|, attained at a sample point
    double witness_t = 0;
};
DiscrepancyReport discrepancy(const std::vector<double>& points);

struct KoksmaResult {
    double lhs = 0;          // |integral of g - sample mean|
    double rhs = 0;          // ||g||_BV * D_n^*
    bool pass = false;
    bool integration_ok = false;
    double integral = 0;
};
KoksmaResult koksma_check(const std::function<double(double)>& g, double total_variation,
                          const std::vector<double>& points, double tolerance = 1e-9);

} // namespace monoloc
