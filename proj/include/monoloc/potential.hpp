#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace monoloc {

// 1-periodic gamma-monotone sampling function: f(y) - f(x) >= gamma (y - x)
// on 0 <= x < y < 1. Evaluation is defined on (0,1); the value at 0 is
// metadata and may be -infinity (infinite coupling).
struct MonotonePotential {
    std::function<double(double)> eval_raw; // defined on (0,1)
    double gamma = 0;
    double lower_limit_at_zero = 0;  // f(0+...0), possibly -inf
    bool bounded_above = true;
    double log_integral = 0;         // integral over (0,1) of log(1+|f|)
    std::string kind = "custom";
    std::vector<double> params;

    bool singular_at_zero() const;
    // wraps the argument to [0,1); returns lower_limit_at_zero at the wrap point
    double evaluate(double x) const;
    double sup_value() const;  // sup over (0,1), = f(1-) by monotonicity
    double inf_value() const;  // inf over (0,1) limit, may be -inf
};

MonotonePotential make_sawtooth(double lambda, double offset);
// f(x) = lambda x + mu log(x): unbounded below at 0, gamma = lambda
MonotonePotential make_log_singular(double lambda, double mu);
// f(x) = lambda x + height * [x >= cut]: monotone with one interior upward jump
MonotonePotential make_step_linear(double lambda, double cut, double height);
// wraps a user function with a declared gamma; log integral computed by quadrature
MonotonePotential make_custom(std::function<double(double)> f, double gamma,
                              double lower_limit_at_zero, bool bounded_above);

struct PotentialValidation {
    bool pass = false;
    double worst_defect = 0;     // min over pairs of f(y) - f(x) - gamma (y - x)
    double witness_x = 0, witness_y = 0;
    double log_integral = 0;
    bool log_integral_finite = false;
};
// randomized pair test of the monotonicity inequality plus the log-integrability check
PotentialValidation validate(const MonotonePotential& pot, int sample_count,
                             std::uint64_t seed = 12345);

// integral over (0,1) of log(1+|f|), endpoint-singularity tolerant
double potential_log_integral(const std::function<double(double)>& f);

} // namespace monoloc
