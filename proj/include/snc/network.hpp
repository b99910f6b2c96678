// Network data model: servers, flows, flow of interest, and validation.
#pragma once

#include <algorithm>
#include <map>
#include <memory>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include "snc/traffic.hpp"

namespace snc {

// Process identifiers used by dependency graphs: "A:<flow>" / "S:<server>".
inline std::string arrival_pid(const std::string& flow_id) { return "A:" + flow_id; }
inline std::string service_pid(const std::string& server_id) { return "S:" + server_id; }

struct Server {
    std::string id;
    ServiceModel service;
};

struct Network;

struct Flow {
    std::string id;
    std::vector<std::string> path;  // ordered server ids
    ArrivalModel arrival;

    // Processes this flow's arrival bound was derived from. External flows
    // depend only on themselves; flows created by cutting carry the full
    // upstream set.
    std::vector<std::string> sources;

    // Set for cut-derived flows so the network file round-trips: the arrival
    // envelope is rebuilt as the departure bound of `upstream_flow` in
    // `upstream_net`.
    std::shared_ptr<const Network> upstream_net;
    std::string upstream_flow;

    std::vector<std::string> source_set() const {
        return sources.empty() ? std::vector<std::string>{arrival_pid(id)} : sources;
    }
};

struct Network {
    std::vector<Server> servers;
    std::vector<Flow> flows;
    std::string foi;
    // Declared stochastic dependence between processes (beyond what source
    // sets imply), e.g. duplicated processes after unfolding.
    std::vector<std::pair<std::string, std::string>> dependence_edges;
    // Optional explicit link set; empty means "links are the union of the
    // flow paths".
    std::vector<std::pair<std::string, std::string>> links;

    const Server* find_server(const std::string& id) const {
        for (const auto& s : servers)
            if (s.id == id) return &s;
        return nullptr;
    }
    const Flow* find_flow(const std::string& id) const {
        for (const auto& f : flows)
            if (f.id == id) return &f;
        return nullptr;
    }
};

// Checks id uniqueness, foi existence, path sanity, link consistency and
// feedforwardness. Returns human-readable violations; empty means valid.
inline std::vector<std::string> validate(const Network& net) {
    std::vector<std::string> bad;
    std::set<std::string> server_ids, flow_ids;
    for (const auto& s : net.servers)
        if (!server_ids.insert(s.id).second) bad.push_back("duplicate server id: " + s.id);
    for (const auto& f : net.flows)
        if (!flow_ids.insert(f.id).second) bad.push_back("duplicate flow id: " + f.id);
    if (!flow_ids.count(net.foi)) bad.push_back("flow of interest not found: " + net.foi);

    std::set<std::pair<std::string, std::string>> link_set(net.links.begin(), net.links.end());
    for (const auto& f : net.flows) {
        if (f.path.empty()) {
            bad.push_back("flow " + f.id + " has an empty path");
            continue;
        }
        std::set<std::string> seen;
        for (const auto& sid : f.path) {
            if (!server_ids.count(sid))
                bad.push_back("flow " + f.id + " references unknown server " + sid);
            if (!seen.insert(sid).second)
                bad.push_back("flow " + f.id + " visits server " + sid + " twice (cyclic routing)");
        }
        if (!link_set.empty()) {
            for (std::size_t i = 0; i + 1 < f.path.size(); ++i) {
                if (!link_set.count({f.path[i], f.path[i + 1]}))
                    bad.push_back("flow " + f.id + " skips a link: no link " + f.path[i] +
                                  " -> " + f.path[i + 1]);
            }
        }
    }

    // Feedforward check: the directed graph on servers induced by all
    // consecutive path pairs (plus declared links) must be acyclic.
    std::map<std::string, std::vector<std::string>> adj;
    std::set<std::pair<std::string, std::string>> edges(net.links.begin(), net.links.end());
    for (const auto& f : net.flows)
        for (std::size_t i = 0; i + 1 < f.path.size(); ++i)
            edges.insert({f.path[i], f.path[i + 1]});
    for (const auto& e : edges) adj[e.first].push_back(e.second);
    std::map<std::string, int> state;  // 0 fresh, 1 on stack, 2 done
    std::vector<std::string> order;
    // Iterative DFS with cycle detection.
    for (const auto& s : net.servers) {
        if (state[s.id]) continue;
        std::vector<std::pair<std::string, std::size_t>> stack{{s.id, 0}};
        state[s.id] = 1;
        while (!stack.empty()) {
            auto& [u, next] = stack.back();
            if (next < adj[u].size()) {
                const std::string v = adj[u][next++];
                if (state[v] == 1) {
                    bad.push_back("routing cycle through servers " + u + " and " + v);
                    state[v] = 2;
                } else if (state[v] == 0) {
                    state[v] = 1;
                    stack.emplace_back(v, 0);
                }
            } else {
                state[u] = 2;
                order.push_back(u);
                stack.pop_back();
            }
        }
    }
    return bad;
}

// Topological order of the server graph (upstream first). Assumes validated.
inline std::vector<std::string> topological_servers(const Network& net) {
    std::map<std::string, std::vector<std::string>> adj;
    std::map<std::string, int> indeg;
    for (const auto& s : net.servers) indeg[s.id] = 0;
    std::set<std::pair<std::string, std::string>> edges(net.links.begin(), net.links.end());
    for (const auto& f : net.flows)
        for (std::size_t i = 0; i + 1 < f.path.size(); ++i)
            edges.insert({f.path[i], f.path[i + 1]});
    for (const auto& e : edges) {
        adj[e.first].push_back(e.second);
        indeg[e.second]++;
    }
    std::vector<std::string> queue, out;
    for (const auto& s : net.servers)
        if (indeg[s.id] == 0) queue.push_back(s.id);
    std::sort(queue.begin(), queue.end());
    while (!queue.empty()) {
        const std::string u = queue.front();
        queue.erase(queue.begin());
        out.push_back(u);
        for (const auto& v : adj[u])
            if (--indeg[v] == 0) queue.push_back(v);
    }
    return out;
}

}  // namespace snc
