// Feedforward-to-tree transformations: flow cutting and server unfolding.
// Both return a rewritten network plus the dependence edges that make the
// rewrite sound.
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include "snc/dependence.hpp"
#include "snc/network.hpp"
#include "snc/pmoo.hpp"
#include "snc/tree.hpp"

namespace snc {

struct SearchBudgetExceeded : std::runtime_error {
    using std::runtime_error::runtime_error;
};

namespace detail {

// Equal-split Hoelder exponents for any non-singleton components among the
// upstream processes: a fixed, feasible choice that keeps derived envelopes
// plain functions of theta.
inline HoelderAssignment equal_split_assignment(const ReducedTree& tree,
                                                const Network& parent) {
    const auto graph =
        dependency_graph_for(tree.flows, tree.servers, parent.dependence_edges);
    HoelderAssignment a;
    for (const auto& comp : graph.nontrivial_components())
        for (const auto& pid : comp) a.exponents[pid] = double(comp.size());
    return a;
}

}  // namespace detail

// Splits `flow_id` at the link (from, to) of its path: the upstream part
// terminates at `from`; a fresh flow (id + "''") starts at `to` with an
// explicit arrival envelope equal to the upstream departure bound, and
// depends on every process that derivation consumed.
inline std::variant<Network, NotTreeReducible> cut_flow(const Network& net,
                                                        const std::string& flow_id,
                                                        const std::string& from,
                                                        const std::string& to) {
    const Flow* flow = net.find_flow(flow_id);
    if (!flow) throw std::invalid_argument("cut_flow: unknown flow " + flow_id);
    std::size_t cut_pos = flow->path.size();
    for (std::size_t i = 0; i + 1 < flow->path.size(); ++i)
        if (flow->path[i] == from && flow->path[i + 1] == to) cut_pos = i;
    if (cut_pos == flow->path.size())
        throw std::invalid_argument("cut_flow: link " + from + " -> " + to +
                                    " is not on the path of flow " + flow_id);

    // Upstream network: the original net with the flow truncated at `from`;
    // its departure bound there is the arrival of the fresh flow.
    auto upstream = std::make_shared<Network>(net);
    for (auto& f : upstream->flows)
        if (f.id == flow_id) f.path.assign(flow->path.begin(), flow->path.begin() + cut_pos + 1);
    upstream->foi = flow_id;
    auto reduced = tree_reduce(*upstream);
    if (!tree_reducible(reduced)) {
        auto w = std::get<NotTreeReducible>(reduced);
        w.message = "cut upstream of flow " + flow_id + " not tree-reducible: " + w.message;
        return w;
    }
    const auto& up_tree = std::get<ReducedTree>(reduced);
    const auto fixed = detail::equal_split_assignment(up_tree, *upstream);
    const auto dep = departure_envelope(up_tree, fixed);

    Network out = net;
    for (auto& f : out.flows)
        if (f.id == flow_id) f.path.assign(flow->path.begin(), flow->path.begin() + cut_pos + 1);
    Flow fresh;
    fresh.id = flow_id + "''";
    fresh.path.assign(flow->path.begin() + cut_pos + 1, flow->path.end());
    fresh.arrival = ArrivalModel::explicit_envelope(dep.env);
    fresh.sources = dep.sources;
    fresh.upstream_net = upstream;
    fresh.upstream_flow = flow_id;
    for (const auto& pid : dep.sources)
        if (pid != arrival_pid(fresh.id)) out.dependence_edges.emplace_back(
            arrival_pid(fresh.id), pid);
    out.flows.push_back(std::move(fresh));
    return out;
}

struct CutPoint {
    std::string flow;
    std::string from;
    std::string to;
};

// Applies a sequence of cuts; fails out on the first rejection.
inline std::variant<Network, NotTreeReducible> apply_cuts(Network net,
                                                          const std::vector<CutPoint>& cuts) {
    for (const auto& c : cuts) {
        auto r = cut_flow(net, c.flow, c.from, c.to);
        if (!std::holds_alternative<Network>(r)) return std::get<NotTreeReducible>(r);
        net = std::get<Network>(std::move(r));
    }
    return net;
}

// All minimal cut sets (by exhaustive search over single links of non-foi
// flows, smallest cardinality first) whose application makes the network
// tree-reducible from the foi's perspective. A tree-reducible input needs
// no cut: the answer is one empty cut set.
inline std::vector<std::vector<CutPoint>> enumerate_cuts(const Network& net,
                                                         std::size_t budget = 5000) {
    if (tree_reducible(tree_reduce(net))) return {{}};
    std::vector<CutPoint> candidates;
    for (const auto& f : net.flows) {
        if (f.id == net.foi) continue;
        for (std::size_t i = 0; i + 1 < f.path.size(); ++i)
            candidates.push_back({f.id, f.path[i], f.path[i + 1]});
    }
    if (candidates.size() > 12)
        throw SearchBudgetExceeded("enumerate_cuts: more than 12 candidate links");
    std::size_t tried = 0;
    std::vector<std::vector<CutPoint>> found;
    for (std::size_t size = 1; size <= std::min<std::size_t>(3, candidates.size()); ++size) {
        std::vector<std::size_t> idx(size);
        // Enumerate ascending index combinations of the given size.
        std::function<void(std::size_t, std::size_t)> rec = [&](std::size_t at,
                                                                std::size_t next) {
            if (at == size) {
                if (++tried > budget) throw SearchBudgetExceeded("enumerate_cuts: budget");
                std::vector<CutPoint> cuts;
                for (std::size_t k : idx) cuts.push_back(candidates[k]);
                auto r = apply_cuts(net, cuts);
                if (std::holds_alternative<Network>(r) &&
                    tree_reducible(tree_reduce(std::get<Network>(r))))
                    found.push_back(cuts);
                return;
            }
            for (std::size_t k = next; k < candidates.size(); ++k) {
                idx[at] = k;
                rec(at + 1, k + 1);
            }
        };
        rec(0, 0);
        if (!found.empty()) break;  // minimal size reached
    }
    return found;
}

struct UnfoldSpec {
    std::string server;                   // server to duplicate
    std::vector<std::string> move_flows;  // flows re-homed onto the duplicate
};

// Duplicates a server; re-homed flows traverse the duplicate instead. Every
// flow through the original leaves a truncated copy loading the instance it
// does not traverse, and each duplicate pairs with its original in the
// dependence edges (the underlying processes are the same).
inline Network unfold(const Network& net, const UnfoldSpec& spec) {
    if (!net.find_server(spec.server))
        throw std::invalid_argument("unfold: unknown server " + spec.server);
    const std::string dup = spec.server + "'";
    if (net.find_server(dup)) throw std::invalid_argument("unfold: " + dup + " already exists");
    std::set<std::string> move(spec.move_flows.begin(), spec.move_flows.end());
    for (const auto& m : spec.move_flows) {
        const Flow* f = net.find_flow(m);
        if (!f) throw std::invalid_argument("unfold: unknown flow " + m);
        if (std::find(f->path.begin(), f->path.end(), spec.server) == f->path.end())
            throw std::invalid_argument("unfold: flow " + m + " does not cross " + spec.server);
    }

    Network out = net;
    out.servers.push_back({dup, net.find_server(spec.server)->service});
    out.dependence_edges.emplace_back(service_pid(spec.server), service_pid(dup));
    std::vector<Flow> copies;
    for (auto& f : out.flows) {
        const bool crosses =
            std::find(f.path.begin(), f.path.end(), spec.server) != f.path.end();
        if (!crosses) continue;
        const bool moved = move.count(f.id) > 0;
        if (moved)
            for (auto& sid : f.path)
                if (sid == spec.server) sid = dup;
        Flow copy;
        copy.id = f.id + "'";
        copy.path = {moved ? spec.server : dup};
        copy.arrival = f.arrival;
        copy.sources = f.source_set();
        copies.push_back(copy);
        out.dependence_edges.emplace_back(arrival_pid(f.id), arrival_pid(copy.id));
    }
    for (auto& c : copies) out.flows.push_back(std::move(c));
    return out;
}

}  // namespace snc
