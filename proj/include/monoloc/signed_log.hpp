#pragma once

#include <cmath>
#include <limits>

namespace monoloc {

// Sign plus log-magnitude. Determinants of n-site boxes grow like e^{nL},
// which overflows doubles near n ~ 700, so every product that can get long
// lives in this form.
struct SignedLog {
    int sign = 0;                // -1, 0, +1
    double lg = -std::numeric_limits<double>::infinity(); // log|value|, -inf when sign == 0

    static SignedLog from(double v) {
        if (v == 0.0) return {};
        return {v > 0 ? 1 : -1, std::log(std::fabs(v))};
    }
    static SignedLog one() { return {1, 0.0}; }

    double value() const {
        if (sign == 0) return 0.0;
        return sign * std::exp(lg); // may overflow to +-inf, caller's problem
    }
    bool is_zero() const { return sign == 0; }

    SignedLog operator*(const SignedLog& o) const {
        if (sign == 0 || o.sign == 0) return {};
        return {sign * o.sign, lg + o.lg};
    }
    SignedLog operator/(const SignedLog& o) const {
        // division by zero deliberately produces sign*inf magnitude
        if (sign == 0) return {};
        return {sign * o.sign, lg - o.lg};
    }
    SignedLog& operator*=(const SignedLog& o) { *this = *this * o; return *this; }

    SignedLog abs() const { return {sign == 0 ? 0 : 1, lg}; }

    // compare by actual signed value
    bool operator<(const SignedLog& o) const {
        if (sign != o.sign) return sign < o.sign;
        if (sign == 0) return false;
        return sign > 0 ? lg < o.lg : lg > o.lg;
    }
};

} // namespace monoloc
