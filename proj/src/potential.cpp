#include "monoloc/potential.hpp"

#include <boost/math/quadrature/tanh_sinh.hpp>
#include <algorithm>
#include <cmath>
#include <limits>
#include <random>
#include <stdexcept>
#include <vector>

namespace monoloc {

bool MonotonePotential::singular_at_zero() const {
    return std::isinf(lower_limit_at_zero) && lower_limit_at_zero < 0;
}

double MonotonePotential::evaluate(double x) const {
    double f = x - std::floor(x);
    if (f == 0.0) return lower_limit_at_zero;
    return eval_raw(f);
}

double MonotonePotential::sup_value() const {
    return eval_raw(1.0 - 1e-12);
}

double MonotonePotential::inf_value() const {
    if (singular_at_zero()) return -std::numeric_limits<double>::infinity();
    return std::min(lower_limit_at_zero, eval_raw(1e-12));
}

double potential_log_integral(const std::function<double(double)>& f) {
    boost::math::quadrature::tanh_sinh<double> integrator;
    auto g = [&](double x) {
        double v = f(x);
        return std::log1p(std::fabs(v));
    };
    return integrator.integrate(g, 0.0, 1.0);
}

MonotonePotential make_sawtooth(double lambda, double offset) {
    if (!(lambda > 0)) throw std::invalid_argument("sawtooth slope must be positive");
    MonotonePotential p;
    p.eval_raw = [lambda, offset](double x) { return lambda * x + offset; };
    p.gamma = lambda;
    p.lower_limit_at_zero = offset;
    p.bounded_above = true;
    p.kind = "sawtooth";
    p.params = {lambda, offset};
    p.log_integral = potential_log_integral(p.eval_raw);
    return p;
}

MonotonePotential make_log_singular(double lambda, double mu) {
    if (!(lambda > 0) || !(mu > 0)) throw std::invalid_argument("log_singular needs lambda, mu > 0");
    MonotonePotential p;
    p.eval_raw = [lambda, mu](double x) { return lambda * x + mu * std::log(x); };
    p.gamma = lambda;
    p.lower_limit_at_zero = -std::numeric_limits<double>::infinity();
    p.bounded_above = true;
    p.kind = "log_singular";
    p.params = {lambda, mu};
    p.log_integral = potential_log_integral(p.eval_raw);
    return p;
}

MonotonePotential make_step_linear(double lambda, double cut, double height) {
    if (!(lambda > 0)) throw std::invalid_argument("step_linear slope must be positive");
    if (!(cut > 0 && cut < 1)) throw std::invalid_argument("step_linear cut must lie in (0,1)");
    if (!(height >= 0)) throw std::invalid_argument("step_linear height must be >= 0");
    MonotonePotential p;
    p.eval_raw = [lambda, cut, height](double x) { return lambda * x + (x >= cut ? height : 0.0); };
    p.gamma = lambda;
    p.lower_limit_at_zero = 0.0;
    p.bounded_above = true;
    p.kind = "step_linear";
    p.params = {lambda, cut, height};
    p.log_integral = potential_log_integral(p.eval_raw);
    return p;
}

MonotonePotential make_custom(std::function<double(double)> f, double gamma,
                              double lower_limit_at_zero, bool bounded_above) {
    MonotonePotential p;
    p.eval_raw = std::move(f);
    p.gamma = gamma;
    p.lower_limit_at_zero = lower_limit_at_zero;
    p.bounded_above = bounded_above;
    p.kind = "custom";
    p.log_integral = potential_log_integral(p.eval_raw);
    return p;
}

PotentialValidation validate(const MonotonePotential& pot, int sample_count, std::uint64_t seed) {
    if (sample_count < 2) throw std::invalid_argument("validate needs sample_count >= 2");
    PotentialValidation rep;
    rep.worst_defect = std::numeric_limits<double>::infinity();
    std::mt19937_64 rng(seed);
    std::uniform_real_distribution<double> uni(1e-9, 1.0 - 1e-9);
    auto probe = [&](double x, double y) {
        if (x > y) std::swap(x, y);
        if (y - x < 1e-12) return;
        // value units, not slope units: dividing by y - x amplifies roundoff
        // without limit for the closest sample pairs
        double defect = pot.eval_raw(y) - pot.eval_raw(x) - pot.gamma * (y - x);
        if (defect < rep.worst_defect) {
            rep.worst_defect = defect;
            rep.witness_x = x;
            rep.witness_y = y;
        }
    };
    // consecutive sorted samples catch local dips, random pairs catch long-range ones
    std::vector<double> xs(sample_count);
    for (double& x : xs) x = uni(rng);
    std::sort(xs.begin(), xs.end());
    for (size_t i = 0; i + 1 < xs.size(); ++i) probe(xs[i], xs[i + 1]);
    for (int t = 0; t < sample_count; ++t) probe(uni(rng), uni(rng));
    rep.log_integral = potential_log_integral(pot.eval_raw);
    rep.log_integral_finite = std::isfinite(rep.log_integral);
    rep.pass = rep.worst_defect >= -1e-9 && rep.log_integral_finite;
    return rep;
}

} // namespace monoloc
