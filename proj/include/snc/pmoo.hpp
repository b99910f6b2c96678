// Tree analysis: end-to-end bounding generating function for the flow of
// interest of a reduced tree, simplification, closed-form performance
// bounds, and the departure envelope used to derive cut flows.
#pragma once

#include <cmath>
#include <functional>
#include <memory>
#include <optional>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "snc/analysis.hpp"
#include "snc/geomgf.hpp"
#include "snc/tree.hpp"

namespace snc {

// Assembles the evaluation view of a reduced tree: on-path servers in foi
// order, then the off-path servers; cross lists exclude the foi itself.
inline AnalysisView view_from_tree(const ReducedTree& tree) {
    AnalysisView view;
    for (std::size_t i = 0; i < tree.flows.size(); ++i) {
        const Flow& f = tree.flows[i];
        view.arrivals.push_back({arrival_pid(f.id), envelope(f.arrival), f.source_set()});
        if (i == tree.foi_index) view.foi_index = view.arrivals.size() - 1;
    }
    auto server_view = [&](const Server& s, bool on_path) {
        ServerView sv;
        sv.service = {service_pid(s.id), envelope(s.service), {service_pid(s.id)}};
        sv.on_path = on_path;
        auto it = tree.crossing.find(s.id);
        if (it != tree.crossing.end())
            for (std::size_t fi : it->second)
                if (fi != tree.foi_index) sv.cross.push_back(fi);
        return sv;
    };
    for (const auto& sid : tree.foi_path()) {
        const Server* s = nullptr;
        for (const auto& cand : tree.servers)
            if (cand.id == sid) s = &cand;
        if (!s) throw std::logic_error("view_from_tree: foi path server missing: " + sid);
        view.servers.push_back(server_view(*s, true));
    }
    for (const auto& s : tree.servers)
        if (!tree.on_foi_path(s.id)) view.servers.push_back(server_view(s, false));
    return view;
}

inline ResidualRates residual_rates(const ReducedTree& tree, double theta,
                                    const HoelderAssignment& assignment = {}) {
    return residual_rates(view_from_tree(tree), theta, assignment);
}

// --- Independent case (Hoelder exponents all one) -------------------------

inline std::optional<GeomGF> e2e_gf(const ReducedTree& tree, double theta) {
    return e2e_gf(residual_rates(tree, theta));
}

inline double backlog_bound(const ReducedTree& tree, double theta, double b) {
    return backlog_violation(residual_rates(tree, theta), b);
}

inline double delay_violation(const ReducedTree& tree, double theta, double T) {
    return delay_violation(residual_rates(tree, theta), T);
}

inline std::optional<GeomGF> departure_gf(const ReducedTree& tree, double theta) {
    return departure_gf(residual_rates(tree, theta));
}

// --- Dependent case (Theorem-style exponent-scaled envelopes) -------------

inline std::optional<GeomGF> e2e_gf_dependent(const ReducedTree& tree,
                                              const HoelderAssignment& assignment,
                                              double theta) {
    return e2e_gf(residual_rates(tree, theta, assignment));
}

inline double dependent_delay_violation(const ReducedTree& tree,
                                        const HoelderAssignment& assignment, double theta,
                                        double T) {
    return delay_violation(residual_rates(tree, theta, assignment), T);
}

inline double dependent_backlog_violation(const ReducedTree& tree,
                                          const HoelderAssignment& assignment, double theta,
                                          double b) {
    return backlog_violation(residual_rates(tree, theta, assignment), b);
}

inline std::optional<GeomGF> dependent_departure_gf(const ReducedTree& tree,
                                                    const HoelderAssignment& assignment,
                                                    double theta) {
    return departure_gf(residual_rates(tree, theta, assignment));
}

// --- Simplification (dominant-pole bounding GF) ----------------------------

// Keeps only the largest pole (smallest residual rate) at its multiplicity;
// every strictly faster pole folds into the prefactor as 1/(1 - r_j/r_1).
// Coefficient-wise dominating bound of the input.
inline GeomGF simplify(const GeomGF& f) {
    if (f.poles.empty()) return f;
    const auto groups = detail::merged_poles(f.poles);
    GeomGF g;
    g.log_c = f.log_c;
    const double rmax = groups.back().first;
    const int k = groups.back().second;
    for (std::size_t i = 0; i + 1 < groups.size(); ++i)
        g.log_c -= groups[i].second * std::log1p(-groups[i].first / rmax);
    g.poles.assign(std::size_t(k), rmax);
    return g;
}

// --- Test oracle -----------------------------------------------------------

// Brute-force coefficient of the end-to-end generating function: the sum
// over all compositions (u_j >= 0, sum u_j = t) of prod exp(-theta rho'_j u_j)
// times the prefactor. Limits keep the enumeration honest and cheap.
inline double e2e_gf_coefficient_oracle(const ReducedTree& tree, double theta, int t) {
    const ResidualRates rr = residual_rates(tree, theta);
    if (!rr.feasible) throw std::domain_error("coefficient oracle: infeasible theta");
    if (t > 60 || rr.on_path.size() > 4)
        throw std::invalid_argument("coefficient oracle: size limits exceeded");
    const std::vector<double> rates = rr.on_path;
    double total = 0.0;
    // Nested composition enumeration.
    std::vector<int> u(rates.size(), 0);
    std::function<void(std::size_t, int)> rec = [&](std::size_t j, int left) {
        if (j + 1 == rates.size()) {
            u[j] = left;
            double expo = 0.0;
            for (std::size_t i = 0; i < rates.size(); ++i) expo -= theta * rates[i] * u[i];
            total += std::exp(expo);
            return;
        }
        for (int v = 0; v <= left; ++v) {
            u[j] = v;
            rec(j + 1, left - v);
        }
    };
    if (rates.empty())
        total = (t == 0) ? 1.0 : 0.0;
    else
        rec(0, t);
    return std::exp(rr.log_prefactor) * total;
}

// --- Departure envelope for downstream use ---------------------------------

// The departure process of the foi is (sigma_D, rho_D)-constrained with
// rho_D = rho_{A1}; sigma_D folds the whole end-to-end prefactor. Returned
// as an ordinary Envelope (a pure function of its argument), so downstream
// Hoelder scaling composes by argument substitution. theta_max is located by
// bisection on upstream stability.
struct DepartureEnvelope {
    Envelope env;
    std::vector<std::string> sources;
};

inline DepartureEnvelope departure_envelope(const ReducedTree& tree,
                                            const HoelderAssignment& fixed = {}) {
    auto view = std::make_shared<AnalysisView>(view_from_tree(tree));
    auto assignment = std::make_shared<HoelderAssignment>(fixed);

    double cap = 50.0;
    for (const auto& a : view->arrivals)
        cap = std::min(cap, a.env.theta_max() / assignment->exponent(a.pid));
    for (const auto& s : view->servers)
        cap = std::min(cap, s.service.env.theta_max() / assignment->exponent(s.service.pid));
    auto feasible = [view, assignment](double a) {
        return residual_rates(*view, a, *assignment).stable();
    };
    double lo = cap * 1e-9;
    if (!feasible(lo)) throw std::domain_error("departure_envelope: upstream unstable");
    double hi = cap;
    if (feasible(hi * (1.0 - 1e-12))) {
        lo = hi;
    } else {
        for (int it = 0; it < 200 && hi - lo > 1e-12 * cap; ++it) {
            const double mid = 0.5 * (lo + hi);
            (feasible(mid) ? lo : hi) = mid;
        }
    }
    const double theta_max = lo;

    auto sigma = memoized([view, assignment](double a) {
        const auto rr = residual_rates(*view, a, *assignment);
        auto gf = departure_gf(rr);
        if (!gf) throw std::domain_error("departure envelope: infeasible argument");
        return gf->log_c / a;
    });
    const std::size_t foi = view->foi_index;
    const double p1 = assignment->exponent(view->arrivals[foi].pid);
    auto rho = [view, foi, p1](double a) { return view->arrivals[foi].env.rho(p1 * a); };

    DepartureEnvelope out;
    out.env = Envelope(std::move(sigma), std::move(rho), theta_max);
    std::set<std::string> src;
    for (const auto& a : view->arrivals)
        for (const auto& pid : a.sources) src.insert(pid);
    for (const auto& s : view->servers) src.insert(s.service.pid);
    out.sources.assign(src.begin(), src.end());
    return out;
}

}  // namespace snc
