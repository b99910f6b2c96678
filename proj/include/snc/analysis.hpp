// Core bound evaluation: an AnalysisView describes which envelope goes where
// (foi arrival, per-server service, per-server cross arrivals, on or off the
// foi path); evaluation at (theta, Hoelder assignment) produces the
// end-to-end bounding generating function and the performance bounds.
//
// The same evaluator backs the independent tree analysis, its partially
// dependent extension, and the flow-analysis baselines (which differ only in
// how they assemble the view).
#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <vector>

#include "snc/dependence.hpp"
#include "snc/envelope.hpp"
#include "snc/geomgf.hpp"
#include "snc/util.hpp"

namespace snc {

/// One envelope instance taking part in an analysis. `pid` keys the Hoelder
/// exponent; `sources` lists the base processes the envelope was derived
/// from (for dependence detection).
struct ProcInstance {
    std::string pid;
    Envelope env;
    std::vector<std::string> sources;
};

struct ServerView {
    ProcInstance service;
    std::vector<std::size_t> cross;  // indices into AnalysisView::arrivals (foi excluded)
    bool on_path = true;
};

struct AnalysisView {
    std::vector<ServerView> servers;     // on-path servers first, in foi order
    std::vector<ProcInstance> arrivals;  // all flows; foi at foi_index
    std::size_t foi_index = 0;
};

/// Residual-rate summary of a view at a fixed (theta, assignment):
/// rho'_j for the on-path servers, the log-prefactor accumulating every
/// sigma term and the off-path geometric factors, and the foi's scaled
/// envelope values. An infeasible evaluation (envelope argument out of
/// domain, or an off-path residual rate <= 0) is reported, not thrown.
struct ResidualRates {
    double theta = 0.0;
    std::vector<double> on_path;  // rho'_j(theta), j on the foi path
    double log_prefactor = 0.0;   // theta * sigma_{S_e2e}(theta)
    double foi_sigma = 0.0;       // sigma_{A_1}(p_1 theta)
    double foi_rho = 0.0;         // rho_{A_1}(p_1 theta)
    bool feasible = false;

    // Stability: every on-path residual rate exceeds the foi rate.
    bool stable() const {
        if (!feasible) return false;
        for (double r : on_path)
            if (!(r > foi_rho)) return false;
        return true;
    }
};

inline ResidualRates residual_rates(const AnalysisView& view, double theta,
                                    const HoelderAssignment& assignment = {}) {
    ResidualRates out;
    out.theta = theta;
    if (!(theta > 0.0)) return out;

    auto scaled = [&](const ProcInstance& p, double& sigma, double& rho) {
        const double arg = assignment.exponent(p.pid) * theta;
        if (!p.env.admits(arg)) return false;
        sigma = p.env.sigma(arg);
        rho = p.env.rho(arg);
        return true;
    };

    const ProcInstance& foi = view.arrivals[view.foi_index];
    if (!scaled(foi, out.foi_sigma, out.foi_rho)) return out;

    double log_pref = 0.0;
    std::vector<double> arr_sigma(view.arrivals.size()), arr_rho(view.arrivals.size());
    std::vector<bool> arr_done(view.arrivals.size(), false);
    for (const auto& srv : view.servers) {
        double ssig, srho;
        if (!scaled(srv.service, ssig, srho)) return out;
        log_pref += theta * ssig;
        double residual = srho;
        for (std::size_t ai : srv.cross) {
            if (!arr_done[ai]) {
                if (!scaled(view.arrivals[ai], arr_sigma[ai], arr_rho[ai])) return out;
                arr_done[ai] = true;
            }
            residual -= arr_rho[ai];
        }
        if (srv.on_path) {
            out.on_path.push_back(residual);
        } else {
            if (!(residual > 0.0)) return out;  // off-path factor diverges
            log_pref -= log1mexp(theta * residual);
        }
    }
    // Every cross arrival's sigma enters once, whether or not its rate was
    // used at any server (flows truncated to a shared server still count).
    for (std::size_t ai = 0; ai < view.arrivals.size(); ++ai) {
        if (ai == view.foi_index) continue;
        if (!arr_done[ai]) {
            if (!scaled(view.arrivals[ai], arr_sigma[ai], arr_rho[ai])) return out;
        }
        log_pref += theta * arr_sigma[ai];
    }
    out.log_prefactor = log_pref;
    out.feasible = true;
    return out;
}

// The end-to-end service bounding generating function: one pole
// exp(-theta * rho'_j) per on-path server, everything else in the prefactor.
inline std::optional<GeomGF> e2e_gf(const ResidualRates& rr) {
    if (!rr.feasible) return std::nullopt;
    GeomGF f;
    f.log_c = rr.log_prefactor;
    for (double r : rr.on_path) f.poles.push_back(std::exp(-rr.theta * r));
    return f;
}

namespace detail {

// Multiplicity of the minimal residual rate under the relative merge
// tolerance, with rates sorted ascending into `sorted`.
inline std::size_t dominant_multiplicity(const std::vector<double>& rates,
                                         std::vector<double>& sorted) {
    sorted = rates;
    std::sort(sorted.begin(), sorted.end());
    std::size_t k = 1;
    while (k < sorted.size() && nearly_equal_rel(sorted[k], sorted[0], kRateMergeTol)) ++k;
    return k;
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Delay violation bounds [z^T] F_d, closed forms.
// ---------------------------------------------------------------------------

// All residual rates pairwise distinct; valid for T >= 0. The partial
// fraction terms alternate in sign, so they are accumulated in signed log
// space.
inline double delay_violation_distinct(const ResidualRates& rr, double T) {
    if (!rr.stable()) return kInf;
    const double theta = rr.theta;
    const auto& rates = rr.on_path;
    for (std::size_t j = 0; j < rates.size(); ++j)
        for (std::size_t k = j + 1; k < rates.size(); ++k)
            if (nearly_equal_rel(rates[j], rates[k], kRateMergeTol)) return kInf;

    const double log_p = theta * rr.foi_sigma + rr.log_prefactor;
    SignedLogSum sum;
    for (std::size_t j = 0; j < rates.size(); ++j) {
        double log_abs = log_p - log1mexp(theta * (rates[j] - rr.foi_rho));
        double sign = 1.0;
        for (std::size_t k = 0; k < rates.size(); ++k) {
            if (k == j) continue;
            const double d = rates[j] - rates[k];
            // 1/(1 - e^{theta d}): negative for d > 0.
            if (d > 0.0) {
                log_abs -= theta * d + log1mexp(theta * d);
                sign = -sign;
            } else {
                log_abs -= log1mexp(-theta * d);
            }
        }
        log_abs -= theta * rates[j] * T;
        sum.add(sign, log_abs);
    }
    return clamp_probability(sum.value());
}

// All residual rates equal; valid for T > 0.
inline double delay_violation_equal(const ResidualRates& rr, double T) {
    if (!rr.stable()) return kInf;
    const double theta = rr.theta;
    const std::size_t n = rr.on_path.size();
    const double rho1 = *std::min_element(rr.on_path.begin(), rr.on_path.end());
    const double log_gap = log1mexp(theta * (rho1 - rr.foi_rho));
    const double log_p = theta * rr.foi_sigma + rr.log_prefactor;
    SignedLogSum sum;
    for (std::size_t i = 1; i <= n; ++i)
        sum.add(1.0, log_binomial(T + double(i) - 2.0, T - 1.0) - theta * rho1 * T -
                         double(n - i + 1) * log_gap);
    return clamp_probability(std::exp(log_p + sum.log_value()));
}

// Constant term of F_d: the delay bound at T = 0, common to all routes.
inline double delay_violation_at_zero(const ResidualRates& rr) {
    if (!rr.stable()) return kInf;
    double log_v = rr.theta * rr.foi_sigma + rr.log_prefactor;
    for (double r : rr.on_path) log_v -= log1mexp(rr.theta * (r - rr.foi_rho));
    return clamp_probability(std::exp(log_v));
}

// General bound: dominant pole at multiplicity k, strictly faster poles
// folded into the prefactor; valid for T > 0 (T = 0 falls back to the
// constant term).
inline double delay_violation_general(const ResidualRates& rr, double T) {
    if (!rr.stable()) return kInf;
    if (T == 0.0) return delay_violation_at_zero(rr);
    const double theta = rr.theta;
    std::vector<double> sorted;
    const std::size_t k = detail::dominant_multiplicity(rr.on_path, sorted);
    const double rho1 = sorted[0];
    double log_p = theta * rr.foi_sigma + rr.log_prefactor;
    for (std::size_t j = k; j < sorted.size(); ++j)
        log_p -= log1mexp(theta * (sorted[j] - rho1));
    const double log_gap = log1mexp(theta * (rho1 - rr.foi_rho));
    SignedLogSum sum;
    for (std::size_t i = 1; i <= k; ++i)
        sum.add(1.0, log_binomial(T + double(i) - 2.0, T - 1.0) - theta * rho1 * T -
                         double(k - i + 1) * log_gap);
    return clamp_probability(std::exp(log_p + sum.log_value()));
}

// Routed delay bound: distinct rates take the exact partial-fraction form,
// full ties take the equal-rate form, everything else the general bound.
inline double delay_violation(const ResidualRates& rr, double T) {
    if (!rr.stable()) return kInf;
    if (T == 0.0) return delay_violation_at_zero(rr);
    std::vector<double> sorted;
    const std::size_t k = detail::dominant_multiplicity(rr.on_path, sorted);
    if (k == sorted.size() && k > 1) return delay_violation_equal(rr, T);
    bool all_distinct = true;
    for (std::size_t j = 0; j + 1 < sorted.size() && all_distinct; ++j)
        if (nearly_equal_rel(sorted[j], sorted[j + 1], kRateMergeTol)) all_distinct = false;
    if (all_distinct) return delay_violation_distinct(rr, T);
    return delay_violation_general(rr, T);
}

// Reference route for the same quantity: Lemma-style tail-sum extraction
// over the end-to-end generating function (Hadamard with the foi geometric
// ratio, then sum of last terms). Slower but formula-free; the closed forms
// above are tested against it.
inline double delay_violation_via_tailsum(const ResidualRates& rr, int T,
                                          double rel_tol = 1e-9) {
    if (!rr.stable()) return kInf;
    auto gf = e2e_gf(rr);
    if (!gf) return kInf;
    GeomGF h = hadamard_with_geometric(*gf, std::exp(rr.theta * rr.foi_rho));
    h.log_c += rr.theta * rr.foi_sigma;
    TailSum tail(h, rel_tol);
    const double log_v = -rr.theta * rr.foi_rho * T + tail.log_value(T);
    return clamp_probability(std::exp(log_v));
}

// ---------------------------------------------------------------------------
// Backlog and departures.
// ---------------------------------------------------------------------------

inline double backlog_violation(const ResidualRates& rr, double b) {
    if (!rr.stable()) return kInf;
    double log_v = rr.theta * rr.foi_sigma + rr.log_prefactor - rr.theta * b;
    for (double r : rr.on_path) log_v -= log1mexp(rr.theta * (r - rr.foi_rho));
    return clamp_probability(std::exp(log_v));
}

// Departure bounding generating function: a single geometric factor with
// ratio exp(theta * rho_{A1}); the e2e prefactor and the per-server folds
// move into the prefactor.
inline std::optional<GeomGF> departure_gf(const ResidualRates& rr) {
    if (!rr.stable()) return std::nullopt;
    double log_c = rr.theta * rr.foi_sigma + rr.log_prefactor;
    for (double r : rr.on_path) log_c -= log1mexp(rr.theta * (r - rr.foi_rho));
    return GeomGF::geometric(log_c, std::exp(rr.theta * rr.foi_rho));
}

}  // namespace snc
