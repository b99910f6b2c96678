// Shared test utilities: samplers and brute-force oracles kept independent
// of the library's computation paths.
#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <vector>

#include "snc/network.hpp"
#include "snc/traffic.hpp"

namespace testutil {

using Rng = std::mt19937_64;

// Per-slot increment sampler for a (sampleable) arrival model. MMOO keeps its
// chain state in `state` (0 = off, 1 = on), initialised from the stationary
// distribution.
class IncrementSampler {
public:
    IncrementSampler(const snc::ArrivalModel& m, Rng& rng) : m_(m) {
        if (m_.kind == snc::ArrivalKind::Mmoo) {
            const double pi_on = (1.0 - m_.p_off) / (2.0 - m_.p_on - m_.p_off);
            state_ = std::bernoulli_distribution(pi_on)(rng) ? 1 : 0;
        }
    }
    double next(Rng& rng) {
        std::uniform_real_distribution<double> u01(0.0, 1.0);
        switch (m_.kind) {
            case snc::ArrivalKind::Exponential:
                return -std::log(1.0 - u01(rng)) / m_.lambda;
            case snc::ArrivalKind::Weibull:
                return m_.lambda * std::sqrt(-std::log(1.0 - u01(rng)));
            case snc::ArrivalKind::Mmoo: {
                const double out = state_ ? m_.peak : 0.0;
                const double stay = state_ ? m_.p_on : m_.p_off;
                if (u01(rng) >= stay) state_ ^= 1;
                return out;
            }
            default: throw std::logic_error("sampler: not sampleable");
        }
    }

private:
    snc::ArrivalModel m_;
    int state_ = 0;
};

// Monte Carlo estimate of E[exp(theta * A(0, n))] with standard error.
struct McMgf {
    double mean;
    double stderr_;
};

inline McMgf mc_mgf(const snc::ArrivalModel& m, double theta, int n, int paths,
                    std::uint64_t seed) {
    Rng rng(seed);
    double sum = 0.0, sumsq = 0.0;
    for (int p = 0; p < paths; ++p) {
        IncrementSampler s(m, rng);
        double a = 0.0;
        for (int i = 0; i < n; ++i) a += s.next(rng);
        const double v = std::exp(theta * a);
        sum += v;
        sumsq += v * v;
    }
    const double mean = sum / paths;
    const double var = std::max(0.0, sumsq / paths - mean * mean);
    return {mean, std::sqrt(var / paths)};
}

// Exact E[exp(theta*A(0,n))] for the two-state MMOO chain in stationarity,
// by direct matrix iteration (independent of the spectral-radius formula).
inline double mmoo_exact_mgf(double p_on, double p_off, double peak, double theta, int n) {
    const double pi_on = (1.0 - p_off) / (2.0 - p_on - p_off);
    const double d_off = 1.0, d_on = std::exp(theta * peak);
    // w is the row vector over states (off, on) after absorbing emissions.
    double w_off = (1.0 - pi_on) * d_off;
    double w_on = pi_on * d_on;
    for (int i = 1; i < n; ++i) {
        const double t_off = w_off * p_off + w_on * (1.0 - p_on);
        const double t_on = w_off * (1.0 - p_off) + w_on * p_on;
        w_off = t_off * d_off;
        w_on = t_on * d_on;
    }
    return w_off + w_on;
}

// Closed-form Weibull(shape 2, scale lambda) MGF via the error function;
// oracle for the quadrature route.
inline double weibull2_mgf_erf(double theta, double lambda) {
    const double h = 0.5 * theta * lambda;
    return 1.0 + std::sqrt(M_PI) * h * std::exp(h * h) * (1.0 + std::erf(h));
}

}  // namespace testutil
