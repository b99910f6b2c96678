// Dependency graphs over arrival/service processes and Hoelder exponent
// assignments on their connected components.
#pragma once

#include <algorithm>
#include <cmath>
#include <functional>
#include <map>
#include <numeric>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "snc/network.hpp"
#include "snc/util.hpp"

namespace snc {

/// Vertices are process ids ("A:<flow>" or "S:<server>"); adjacency marks
/// possible stochastic dependence. Connected components partition the
/// vertex set; a vertex with no edge is a singleton component.
struct DependencyGraph {
    std::vector<std::string> vertices;
    std::vector<std::pair<std::string, std::string>> edges;
    std::vector<std::vector<std::string>> components;  // each sorted; singletons included

    const std::vector<std::string>* component_of(const std::string& pid) const {
        for (const auto& c : components)
            if (std::find(c.begin(), c.end(), pid) != c.end()) return &c;
        return nullptr;
    }
    std::vector<std::vector<std::string>> nontrivial_components() const {
        std::vector<std::vector<std::string>> out;
        for (const auto& c : components)
            if (c.size() > 1) out.push_back(c);
        return out;
    }
};

inline DependencyGraph build_dependency_graph(
    std::vector<std::string> vertices,
    const std::vector<std::pair<std::string, std::string>>& extra_edges) {
    std::sort(vertices.begin(), vertices.end());
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < vertices.size(); ++i) index[vertices[i]] = i;

    DependencyGraph g;
    g.vertices = vertices;
    std::vector<std::size_t> parent(vertices.size());
    std::iota(parent.begin(), parent.end(), 0);
    std::function<std::size_t(std::size_t)> find = [&](std::size_t x) {
        while (parent[x] != x) x = parent[x] = parent[parent[x]];
        return x;
    };
    for (const auto& [a, b] : extra_edges) {
        auto ia = index.find(a), ib = index.find(b);
        if (ia == index.end() || ib == index.end())
            throw std::invalid_argument("dependency edge references unknown process: " + a +
                                        " -- " + b);
        g.edges.emplace_back(a, b);
        parent[find(ia->second)] = find(ib->second);
    }
    std::map<std::size_t, std::vector<std::string>> comps;
    for (std::size_t i = 0; i < vertices.size(); ++i) comps[find(i)].push_back(vertices[i]);
    for (auto& [root, members] : comps) {
        std::sort(members.begin(), members.end());
        g.components.push_back(members);
    }
    std::sort(g.components.begin(), g.components.end());
    return g;
}

// Builds the graph for an analysis over the given flows/servers: starts from
// full independence, adds declared edges (restricted to present processes)
// and edges implied by shared derivation sources.
inline DependencyGraph dependency_graph_for(
    const std::vector<Flow>& flows, const std::vector<Server>& servers,
    const std::vector<std::pair<std::string, std::string>>& declared_edges) {
    std::vector<std::string> vertices;
    std::set<std::string> present;
    for (const auto& f : flows) {
        vertices.push_back(arrival_pid(f.id));
        present.insert(vertices.back());
    }
    for (const auto& s : servers) {
        vertices.push_back(service_pid(s.id));
        present.insert(vertices.back());
    }
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [a, b] : declared_edges)
        if (present.count(a) && present.count(b)) edges.emplace_back(a, b);
    // A derived flow depends on every present process its derivation
    // consumed, and on any other flow whose derivation shares a source.
    for (std::size_t i = 0; i < flows.size(); ++i) {
        const auto si = flows[i].source_set();
        const std::set<std::string> set_i(si.begin(), si.end());
        for (const auto& pid : si)
            if (pid != arrival_pid(flows[i].id) && present.count(pid))
                edges.emplace_back(arrival_pid(flows[i].id), pid);
        for (std::size_t j = i + 1; j < flows.size(); ++j) {
            for (const auto& pid : flows[j].source_set()) {
                if (set_i.count(pid)) {
                    edges.emplace_back(arrival_pid(flows[i].id), arrival_pid(flows[j].id));
                    break;
                }
            }
        }
    }
    return build_dependency_graph(vertices, edges);
}

/// Exponents p_h in (1, inf) for processes in non-singleton components;
/// absent processes implicitly have exponent 1.
struct HoelderAssignment {
    std::map<std::string, double> exponents;

    double exponent(const std::string& pid) const {
        auto it = exponents.find(pid);
        return it == exponents.end() ? 1.0 : it->second;
    }
    bool empty() const { return exponents.empty(); }
};

// One simplex constraint per non-singleton component: sum of 1/p_h == 1.
inline std::vector<std::vector<std::string>> partial_hoelder_exponent_constraints(
    const DependencyGraph& graph) {
    return graph.nontrivial_components();
}

inline bool assignment_satisfies(const DependencyGraph& graph, const HoelderAssignment& a,
                                 double tol = 1e-12) {
    for (const auto& comp : graph.nontrivial_components()) {
        double sum = 0.0;
        for (const auto& pid : comp) sum += 1.0 / a.exponent(pid);
        if (std::abs(sum - 1.0) > tol * comp.size()) return false;
    }
    return true;
}

// Maps unconstrained reals onto the interior of the exponent simplices via
// stick-breaking, one group of (size-1) coordinates per non-singleton
// component, in the order returned by partial_hoelder_exponent_constraints.
inline HoelderAssignment assignment_from_unconstrained(
    const std::vector<std::vector<std::string>>& constraints, const std::vector<double>& x) {
    HoelderAssignment a;
    std::size_t k = 0;
    for (const auto& comp : constraints) {
        double remaining = 1.0;
        for (std::size_t i = 0; i + 1 < comp.size(); ++i) {
            if (k >= x.size())
                throw std::invalid_argument("assignment_from_unconstrained: too few coordinates");
            const double frac = 1.0 / (1.0 + std::exp(-x[k++]));
            const double w = remaining * frac;
            a.exponents[comp[i]] = 1.0 / w;
            remaining -= w;
        }
        a.exponents[comp.back()] = 1.0 / remaining;
    }
    if (k != x.size())
        throw std::invalid_argument("assignment_from_unconstrained: too many coordinates");
    return a;
}

inline std::size_t free_dimension(const std::vector<std::vector<std::string>>& constraints) {
    std::size_t d = 0;
    for (const auto& comp : constraints) d += comp.size() - 1;
    return d;
}

}  // namespace snc
