// Algebra of bounding generating functions of the form
//   F(z) = c * prod_j 1/(1 - r_j z),
// kept as a log-prefactor plus a multiset of pole ratios r_j. Composition
// (Cauchy and Hadamard products) is exact on this representation; partial
// fractions only happen at final bound extraction.
#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <vector>

#include "snc/util.hpp"

namespace snc {

struct GeomGF {
    double log_c = 0.0;           // ln of the prefactor; c > 0 by construction
    std::vector<double> poles;    // geometric ratios r_j > 0, unsorted multiset

    static GeomGF constant(double log_c) { return GeomGF{log_c, {}}; }
    static GeomGF geometric(double log_c, double ratio) { return GeomGF{log_c, {ratio}}; }
};

// (min,plus)-convolution of the represented processes: prefactors multiply,
// pole multisets merge.
inline GeomGF cauchy_product(const GeomGF& f, const GeomGF& g) {
    GeomGF h;
    h.log_c = f.log_c + g.log_c;
    h.poles = f.poles;
    h.poles.insert(h.poles.end(), g.poles.begin(), g.poles.end());
    return h;
}

// Hadamard product with the geometric sequence (r^n): G(z) -> G(r z).
inline GeomGF hadamard_with_geometric(const GeomGF& g, double r) {
    if (!(r > 0.0)) throw std::invalid_argument("hadamard_with_geometric: r must be > 0");
    GeomGF h = g;
    for (double& p : h.poles) p *= r;
    return h;
}

namespace detail {

// Groups near-equal poles (|ln r_i - ln r_j| < kPoleMergeTol) into
// (geometric mean, multiplicity) pairs. Extraction-time only; the algebraic
// representation keeps the multiset exact.
inline std::vector<std::pair<double, int>> merged_poles(const std::vector<double>& poles) {
    std::vector<double> logs;
    logs.reserve(poles.size());
    for (double p : poles) {
        if (!(p > 0.0)) throw std::domain_error("GeomGF: poles must be positive");
        logs.push_back(std::log(p));
    }
    std::sort(logs.begin(), logs.end());
    std::vector<std::pair<double, int>> out;
    std::size_t i = 0;
    while (i < logs.size()) {
        std::size_t j = i;
        double sum = 0.0;
        while (j < logs.size() && logs[j] - logs[i] < kPoleMergeTol) sum += logs[j++];
        out.emplace_back(std::exp(sum / double(j - i)), int(j - i));
        i = j;
    }
    return out;
}

// Coefficients [z^0 .. z^order] of prod_j 1/(1 - s_j z) for s_j <= 1, by the
// per-pole prefix recurrence (multiplying by 1/(1 - s z) maps c_n to
// c_n + s * c_{n-1} cumulatively).
inline std::vector<double> unit_series(const std::vector<double>& scaled_poles, int order) {
    std::vector<double> c(std::size_t(order) + 1, 0.0);
    c[0] = 1.0;
    for (double s : scaled_poles)
        for (int n = 1; n <= order; ++n) c[std::size_t(n)] += s * c[std::size_t(n) - 1];
    return c;
}

}  // namespace detail

// ln [z^n]F. Computed with the largest pole factored out so the running
// series stays within floating range regardless of n and of poles above 1.
inline double log_coefficient(const GeomGF& f, int n) {
    if (n < 0) throw std::invalid_argument("log_coefficient: n must be >= 0");
    if (n == 0) return f.log_c;
    if (f.poles.empty()) return -kInf;
    const auto groups = detail::merged_poles(f.poles);
    const double rmax = groups.back().first;
    const double lmax = std::log(rmax);
    if (groups.size() == 1) {
        // Single pole of multiplicity m: C(n+m-1, n) r^n.
        const int m = groups.front().second;
        return f.log_c + log_binomial(n + m - 1.0, double(n)) + n * lmax;
    }
    if (groups.size() == 2) {
        // Two distinct poles (a, mult k), (b, mult m), a < b:
        // [z^n] = sum_{i=0..n} C(i+k-1,i) a^i C(n-i+m-1,n-i) b^(n-i).
        const double a = groups.front().first;
        const int k = groups.front().second;
        const double b = groups.back().first;
        const int m = groups.back().second;
        SignedLogSum s;
        for (int i = 0; i <= n; ++i)
            s.add(1.0, log_binomial(i + k - 1.0, double(i)) + i * std::log(a) +
                           log_binomial(n - i + m - 1.0, double(n - i)) +
                           (n - i) * std::log(b));
        return f.log_c + s.log_value();
    }
    // General case: dynamic programming on poles scaled by 1/rmax; scaled
    // coefficients are bounded by C(n+m-1, m-1).
    std::vector<double> scaled;
    scaled.reserve(f.poles.size());
    for (double p : f.poles) scaled.push_back(p / rmax);
    const double cn = detail::unit_series(scaled, n)[std::size_t(n)];
    return f.log_c + n * lmax + std::log(cn);
}

// [z^n]F in linear space (may overflow for poles > 1 at large n; use
// log_coefficient when in doubt).
inline double coefficient(const GeomGF& f, int n) { return std::exp(log_coefficient(f, n)); }

// F evaluated at a real point z = x with r_j x < 1 for all j.
// Returns ln F(x), or +inf if the evaluation point is outside the disc.
inline double log_evaluate(const GeomGF& f, double x) {
    double acc = f.log_c;
    for (double p : f.poles) {
        const double q = p * x;
        if (!(q < 1.0)) return kInf;
        acc -= std::log1p(-q);
    }
    return acc;
}

/// Tail-sum view of a summable GeomGF: g_n = sum_{m >= n} f_m, the
/// generating-function identity G(z) = (F(1) - z F(z)) / (1 - z) realised as
/// a numeric evaluator. Requires all poles < 1.
class TailSum {
public:
    explicit TailSum(GeomGF f, double rel_tol = 1e-12)
        : f_(std::move(f)), rel_tol_(rel_tol) {
        for (double p : f_.poles) {
            if (!(p < 1.0))
                throw std::domain_error("tail_sum_transform: pole >= 1, series diverges");
            rmax_ = std::max(rmax_, p);
        }
    }

    // Natural log of g_n. Sums the scaled series forward from n with a
    // rigorous geometric remainder cutoff: with m poles, the coefficient
    // ratio h_{s+1}/h_s is at most rmax * (s+m)/(s+1).
    double log_value(int n) const {
        if (n < 0) throw std::invalid_argument("TailSum: n must be >= 0");
        if (f_.poles.empty()) return n == 0 ? f_.log_c : -kInf;
        const int m = int(f_.poles.size());
        std::vector<double> scaled;  // poles relative to rmax, all <= 1
        scaled.reserve(f_.poles.size());
        for (double p : f_.poles) scaled.push_back(p / rmax_);
        const double lmax = std::log(rmax_);

        // h_s = u_s * rmax^s with u_s the coefficients of prod 1/(1 - s_j z).
        // cols[j] tracks the series after the first j factors at the current
        // order: cols[j](s) = cols[j-1](s) + s_j * cols[j](s-1).
        std::vector<double> cols(scaled.size() + 1, 1.0);
        for (int s = 1; s <= n; ++s) {
            double carry = 0.0;  // order-s coefficient of the empty product
            for (std::size_t j = 1; j < cols.size(); ++j) {
                carry = carry + scaled[j - 1] * cols[j];
                cols[j] = carry;
            }
            cols[0] = 0.0;
        }
        const int max_terms = 5'000'000 / std::max(m, 1);
        double t = 0.0, w = 1.0;  // w = rmax^(s-n)
        for (int s = n;; ++s) {
            const double us = cols.back();
            t += us * w;
            const double q = rmax_ * double(s + m) / double(s + 1);
            if (q < 1.0) {
                const double rem = us * w * q / (1.0 - q);
                if (rem <= rel_tol_ * t) break;
                if (s - n >= max_terms) {
                    t += rem;  // keep the result an upper bound
                    break;
                }
            } else if (s - n >= max_terms) {
                throw std::domain_error("TailSum: series did not converge within budget");
            }
            double carry = 0.0;
            for (std::size_t j = 1; j < cols.size(); ++j) {
                carry = carry + scaled[j - 1] * cols[j];
                cols[j] = carry;
            }
            cols[0] = 0.0;
            w *= rmax_;
        }
        return f_.log_c + n * lmax + std::log(t);
    }

    double value(int n) const { return std::exp(log_value(n)); }

private:
    GeomGF f_;
    double rel_tol_;
    double rmax_ = 0.0;
};

inline TailSum tail_sum_transform(const GeomGF& f) { return TailSum(f); }

// Test oracle: exact coefficients 0..order by brute-force polynomial
// multiplication of truncated geometric series. Deliberately independent of
// the closed-form / DP paths above.
inline std::vector<double> series_oracle(const GeomGF& f, int order) {
    if (order < 0 || order > 10'000)
        throw std::invalid_argument("series_oracle: order out of range");
    std::vector<double> acc(std::size_t(order) + 1, 0.0);
    acc[0] = std::exp(f.log_c);
    for (double p : f.poles) {
        std::vector<double> geo(std::size_t(order) + 1);
        double v = 1.0;
        for (int n = 0; n <= order; ++n, v *= p) geo[std::size_t(n)] = v;
        std::vector<double> next(std::size_t(order) + 1, 0.0);
        for (int a = 0; a <= order; ++a)
            for (int b = 0; a + b <= order; ++b)
                next[std::size_t(a + b)] += acc[std::size_t(a)] * geo[std::size_t(b)];
        acc = std::move(next);
    }
    return acc;
}

}  // namespace snc
