// Shared numeric helpers: log-space arithmetic and tolerances.
#pragma once

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <vector>

namespace snc {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Tolerance for treating two residual rates as equal (relative).
inline constexpr double kRateMergeTol = 1e-6;
// Tolerance for merging generating-function poles (on ln r).
inline constexpr double kPoleMergeTol = 1e-9;

// ln(1 - e^(-x)) for x > 0, stable near both ends.
inline double log1mexp(double x) {
    if (x <= 0.0) throw std::domain_error("log1mexp: x must be positive");
    return x > 0.6931471805599453 ? std::log1p(-std::exp(-x)) : std::log(-std::expm1(-x));
}

// ln C(n, k) via lgamma; n, k need not be small.
inline double log_binomial(double n, double k) {
    if (k < 0 || k > n) return -kInf;
    return std::lgamma(n + 1.0) - std::lgamma(k + 1.0) - std::lgamma(n - k + 1.0);
}

// Accumulates sum_i s_i * exp(l_i) without leaving log space until the end.
// Used for partial-fraction sums whose terms alternate in sign and can be
// individually far larger than the total.
class SignedLogSum {
public:
    void add(double sign, double log_abs) {
        if (log_abs == -kInf || sign == 0.0) return;
        terms_.push_back({sign, log_abs});
    }
    // Returns the plain (linear-space) value of the accumulated sum.
    double value() const {
        if (terms_.empty()) return 0.0;
        double m = -kInf;
        for (const auto& t : terms_) m = std::max(m, t.log_abs);
        if (m == -kInf) return 0.0;
        double acc = 0.0;
        for (const auto& t : terms_) acc += t.sign * std::exp(t.log_abs - m);
        return acc * std::exp(m);
    }
    // Log of the sum, assuming it is positive (returns -inf otherwise).
    double log_value() const {
        if (terms_.empty()) return -kInf;
        double m = -kInf;
        for (const auto& t : terms_) m = std::max(m, t.log_abs);
        if (m == -kInf) return -kInf;
        double acc = 0.0;
        for (const auto& t : terms_) acc += t.sign * std::exp(t.log_abs - m);
        return acc > 0.0 ? m + std::log(acc) : -kInf;
    }

private:
    struct Term {
        double sign;
        double log_abs;
    };
    std::vector<Term> terms_;
};

inline bool nearly_equal_rel(double a, double b, double rel_tol) {
    const double scale = std::max({std::abs(a), std::abs(b), 1e-300});
    return std::abs(a - b) <= rel_tol * scale;
}

// Probability bounds from Chernoff arguments may exceed one; clamping is sound.
inline double clamp_probability(double p) {
    if (std::isnan(p)) return kInf;  // propagate as infeasible
    return std::min(p, 1.0);
}

}  // namespace snc
