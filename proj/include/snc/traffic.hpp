// Arrival and service process models and their (sigma, rho)-envelopes.
#pragma once

#include <cmath>
#include <functional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "snc/envelope.hpp"
#include "snc/util.hpp"

namespace snc {

enum class ArrivalKind { Exponential, Weibull, Mmoo, Explicit };

namespace detail {

// Adaptive Simpson on [a, b] with absolute tolerance eps.
inline double adaptive_simpson(const std::function<double(double)>& f, double a, double b,
                               double eps, int depth, double fa, double fm, double fb,
                               double whole) {
    const double m = 0.5 * (a + b);
    const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
    const double flm = f(lm), frm = f(rm);
    const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    const double delta = left + right - whole;
    if (depth <= 0 || std::abs(delta) <= 15.0 * eps) return left + right + delta / 15.0;
    return adaptive_simpson(f, a, m, 0.5 * eps, depth - 1, fa, flm, fm, left) +
           adaptive_simpson(f, m, b, 0.5 * eps, depth - 1, fm, frm, fb, right);
}

inline double integrate(const std::function<double(double)>& f, double a, double b,
                        double rel_tol, int panels = 128) {
    // Seed with a uniform panel sweep so narrow peaks are not missed, then
    // refine each panel adaptively.
    double coarse = 0.0;
    std::vector<double> xs(panels + 1), fs(panels + 1);
    for (int i = 0; i <= panels; ++i) {
        xs[i] = a + (b - a) * i / panels;
        fs[i] = f(xs[i]);
    }
    for (int i = 0; i < panels; ++i)
        coarse += (xs[i + 1] - xs[i]) * 0.5 * (fs[i] + fs[i + 1]);
    const double eps = std::max(rel_tol * std::abs(coarse), 1e-300) / panels;
    double total = 0.0;
    for (int i = 0; i < panels; ++i) {
        const double m = 0.5 * (xs[i] + xs[i + 1]);
        const double fm = f(m);
        const double whole = (xs[i + 1] - xs[i]) / 6.0 * (fs[i] + 4.0 * fm + fs[i + 1]);
        total += adaptive_simpson(f, xs[i], xs[i + 1], eps, 40, fs[i], fm, fs[i + 1], whole);
    }
    return total;
}

// Weibull density with shape 2 and scale lambda: f(x) = (2x/lambda^2) exp(-(x/lambda)^2).
inline double weibull2_density(double x, double lambda) {
    const double u = x / lambda;
    return 2.0 * u / lambda * std::exp(-u * u);
}

// ln E[exp(theta*X)] for X ~ Weibull(shape 2, scale lambda), by quadrature.
// The truncation point Q puts the neglected tail below 1e-12 relative: the
// exponent theta*x - (x/lambda)^2 is a downward parabola with apex at
// theta*lambda^2/2 and Gaussian width lambda/sqrt(2).
inline double weibull2_log_mgf(double theta, double lambda) {
    const double apex = 0.5 * theta * lambda * lambda;
    const double q = apex + 9.0 * lambda;
    if (theta * lambda < 1.0) {
        // Small theta: integrate expm1 to keep precision in m(theta) - 1.
        auto g = [&](double x) { return std::expm1(theta * x) * weibull2_density(x, lambda); };
        return std::log1p(integrate(g, 0.0, q, 1e-10));
    }
    // Large theta: shift by the apex value so the integrand stays in range.
    const double shift = theta * apex - apex * apex / (lambda * lambda);
    auto g = [&](double x) {
        const double u = x / lambda;
        return 2.0 * u / lambda * std::exp(theta * x - u * u - shift);
    };
    return shift + std::log(integrate(g, 0.0, q, 1e-10));
}

// Spectral radius of the theta-modulated two-state MMOO matrix.
inline double mmoo_spectral_radius(double theta, double p_on, double p_off, double peak) {
    const double e = std::exp(theta * peak);
    const double d = p_on * e - p_off;
    return 0.5 * (p_on * e + p_off + std::sqrt(d * d + 4.0 * (1.0 - p_on) * (1.0 - p_off) * e));
}

}  // namespace detail

/// Arrival process model. All concrete models have i.i.d. or stationary
/// per-slot increments whose envelope is exact with sigma == 0.
struct ArrivalModel {
    ArrivalKind kind = ArrivalKind::Exponential;
    double lambda = 1.0;        // Exponential rate / Weibull scale
    double p_on = 0.5;          // MMOO: P(stay on)
    double p_off = 0.5;         // MMOO: P(stay off)
    double peak = 1.0;          // MMOO: on-state rate
    Envelope explicit_env;      // Explicit only

    static ArrivalModel exponential(double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("exponential: lambda must be > 0");
        ArrivalModel m;
        m.kind = ArrivalKind::Exponential;
        m.lambda = lambda;
        return m;
    }
    static ArrivalModel weibull(double lambda) {
        if (!(lambda > 0.0)) throw std::invalid_argument("weibull: lambda must be > 0");
        ArrivalModel m;
        m.kind = ArrivalKind::Weibull;
        m.lambda = lambda;
        return m;
    }
    static ArrivalModel mmoo(double p_on, double p_off, double peak) {
        if (!(p_on > 0.0 && p_on < 1.0) || !(p_off > 0.0 && p_off < 1.0) || !(peak > 0.0))
            throw std::invalid_argument("mmoo: need 0 < p_on, p_off < 1 and peak > 0");
        ArrivalModel m;
        m.kind = ArrivalKind::Mmoo;
        m.p_on = p_on;
        m.p_off = p_off;
        m.peak = peak;
        return m;
    }
    static ArrivalModel explicit_envelope(Envelope env) {
        ArrivalModel m;
        m.kind = ArrivalKind::Explicit;
        m.explicit_env = std::move(env);
        return m;
    }

    bool sampleable() const { return kind != ArrivalKind::Explicit; }

    double mean_rate() const {
        switch (kind) {
            case ArrivalKind::Exponential: return 1.0 / lambda;
            case ArrivalKind::Weibull: return 0.5 * lambda * std::sqrt(M_PI);
            case ArrivalKind::Mmoo:
                return peak * (1.0 - p_off) / (2.0 - p_on - p_off);
            case ArrivalKind::Explicit: {
                // rho(theta) -> mean rate as theta -> 0+.
                const double t = std::min(1e-8, 0.5 * explicit_env.theta_max());
                return explicit_env.rho(t);
            }
        }
        return 0.0;
    }
};

/// Service process model.
struct ServiceModel {
    bool constant = true;
    double rate = 1.0;
    Envelope explicit_env;

    static ServiceModel constant_rate(double c) {
        if (!(c > 0.0)) throw std::invalid_argument("constant_rate: rate must be > 0");
        ServiceModel s;
        s.constant = true;
        s.rate = c;
        return s;
    }
    static ServiceModel explicit_envelope(Envelope env) {
        ServiceModel s;
        s.constant = false;
        s.explicit_env = std::move(env);
        return s;
    }
};

/// Envelope of an arrival model. For i.i.d.-increment models the per-slot
/// bound is exact: sigma == 0 and rho(theta) = ln m(theta) / theta.
inline Envelope envelope(const ArrivalModel& model) {
    auto zero = [](double) { return 0.0; };
    switch (model.kind) {
        case ArrivalKind::Exponential: {
            const double lambda = model.lambda;
            return Envelope(zero,
                            [lambda](double t) { return std::log(lambda / (lambda - t)) / t; },
                            lambda);
        }
        case ArrivalKind::Weibull: {
            const double lambda = model.lambda;
            return Envelope(
                zero,
                memoized([lambda](double t) { return detail::weibull2_log_mgf(t, lambda) / t; }),
                kInf);
        }
        case ArrivalKind::Mmoo: {
            const double p_on = model.p_on, p_off = model.p_off, peak = model.peak;
            return Envelope(zero,
                            memoized([=](double t) {
                                return std::log(detail::mmoo_spectral_radius(t, p_on, p_off,
                                                                             peak)) / t;
                            }),
                            kInf);
        }
        case ArrivalKind::Explicit: return model.explicit_env;
    }
    throw std::logic_error("envelope: unknown arrival kind");
}

inline Envelope envelope(const ServiceModel& model) {
    if (!model.constant) return model.explicit_env;
    const double c = model.rate;
    return Envelope([](double) { return 0.0; }, [c](double) { return c; }, kInf);
}

}  // namespace snc
