// (sigma, rho)-envelopes of arrival and service processes.
//
// An arrival envelope bounds E[exp(theta*A(s,t))] by
// exp(theta*(sigma(theta) + rho(theta)*(t-s))); a service envelope bounds
// E[exp(-theta*S(s,t))] by exp(theta*(sigma(theta) - rho(theta)*(t-s))).
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <string>
#include <unordered_map>
#include <utility>

#include "snc/util.hpp"

namespace snc {

/// Envelope of a process as a function of theta. Immutable after
/// construction; evaluation is pure and safe to call concurrently.
class Envelope {
public:
    using Fn = std::function<double(double)>;

    Envelope() = default;
    Envelope(Fn sigma, Fn rho, double theta_max)
        : sigma_(std::move(sigma)), rho_(std::move(rho)), theta_max_(theta_max) {}

    double theta_max() const { return theta_max_; }
    bool admits(double theta) const { return theta > 0.0 && theta < theta_max_; }

    // Evaluating at theta >= theta_max is a hard error, never a silent
    // infinity; analysis layers must pre-check with admits().
    double sigma(double theta) const {
        check(theta);
        return sigma_(theta);
    }
    double rho(double theta) const {
        check(theta);
        return rho_(theta);
    }

private:
    void check(double theta) const {
        if (!(theta > 0.0)) throw std::domain_error("Envelope: theta must be positive");
        if (!(theta < theta_max_))
            throw std::domain_error("Envelope: theta >= theta_max (" +
                                    std::to_string(theta_max_) + ")");
    }

    Fn sigma_ = [](double) { return 0.0; };
    Fn rho_ = [](double) { return 0.0; };
    double theta_max_ = kInf;
};

// Wraps fn with a thread-safe per-argument cache. The optimizer revisits
// theta values many times; quadrature-backed envelopes are the motivation.
inline Envelope::Fn memoized(Envelope::Fn fn) {
    struct Cache {
        std::mutex mu;
        std::unordered_map<double, double> values;
    };
    auto cache = std::make_shared<Cache>();
    return [fn = std::move(fn), cache](double theta) {
        {
            std::lock_guard<std::mutex> lock(cache->mu);
            auto it = cache->values.find(theta);
            if (it != cache->values.end()) return it->second;
        }
        const double v = fn(theta);
        std::lock_guard<std::mutex> lock(cache->mu);
        cache->values.emplace(theta, v);
        return v;
    };
}

}  // namespace snc
