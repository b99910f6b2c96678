// Reduction of a feedforward network to the in-tree seen by the flow of
// interest: truncate cross-flows after their last direct or indirect
// interaction, drop what never interacts, and reject rejoining flows.
#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <variant>
#include <vector>

#include "snc/network.hpp"

namespace snc {

struct ReducedTree {
    std::vector<Server> servers;  // topological order, root last
    std::vector<Flow> flows;      // paths already truncated
    std::size_t foi_index = 0;
    std::string root;
    std::map<std::string, std::string> successor;        // j -> j., root absent
    std::map<std::string, std::vector<std::size_t>> crossing;  // server -> flow indices

    const std::vector<std::string>& foi_path() const { return flows[foi_index].path; }
    bool on_foi_path(const std::string& server) const {
        for (const auto& s : foi_path())
            if (s == server) return true;
        return false;
    }
};

struct NotTreeReducible {
    std::string flow_a;
    std::string flow_b;
    std::string diverge_server;
    std::string rejoin_server;  // empty if none found
    std::string message;
};

using TreeReduceResult = std::variant<ReducedTree, NotTreeReducible>;

inline bool tree_reducible(const TreeReduceResult& r) {
    return std::holds_alternative<ReducedTree>(r);
}

inline TreeReduceResult tree_reduce(const Network& net) {
    const Flow* foi = net.find_flow(net.foi);
    if (!foi) return NotTreeReducible{"", "", "", "", "flow of interest missing"};

    std::map<std::string, std::map<std::string, int>> pos;  // flow -> server -> index
    for (const auto& f : net.flows)
        for (std::size_t i = 0; i < f.path.size(); ++i) pos[f.id][f.path[i]] = int(i);

    // Step 1: truncation points as a least fixpoint. trunc[i] is the last
    // path index at which flow i interacts (directly or through already
    // relevant flows) with the foi; -1 means no interaction at all.
    std::map<std::string, int> trunc;
    for (const auto& f : net.flows) {
        if (f.id == net.foi) {
            trunc[f.id] = int(f.path.size()) - 1;
            continue;
        }
        int t = -1;
        for (std::size_t i = 0; i < f.path.size(); ++i)
            if (pos[net.foi].count(f.path[i])) t = int(i);
        trunc[f.id] = t;
    }
    for (bool changed = true; changed;) {
        changed = false;
        for (const auto& f : net.flows) {
            if (f.id == net.foi) continue;
            for (int i = int(f.path.size()) - 1; i > trunc[f.id]; --i) {
                const std::string& s = f.path[std::size_t(i)];
                bool relevant = false;
                for (const auto& g : net.flows) {
                    if (g.id == f.id) continue;
                    auto it = pos[g.id].find(s);
                    if (it != pos[g.id].end() && it->second <= trunc[g.id]) {
                        relevant = true;
                        break;
                    }
                }
                if (relevant) {
                    trunc[f.id] = i;
                    changed = true;
                    break;
                }
            }
        }
    }

    // Collect surviving flows with truncated paths, then surviving servers.
    std::vector<Flow> kept;
    for (const auto& f : net.flows) {
        if (trunc[f.id] < 0) continue;
        Flow g = f;
        g.path.assign(f.path.begin(), f.path.begin() + trunc[f.id] + 1);
        kept.push_back(std::move(g));
    }
    std::set<std::string> used;
    for (const auto& f : kept) used.insert(f.path.begin(), f.path.end());

    // Steps 2-3: the union of remaining paths must form an in-tree rooted at
    // the foi's last server. A server with two distinct successors marks a
    // pair of flows that diverge and (directly or indirectly) rejoin.
    std::map<std::string, std::string> succ;
    std::map<std::string, std::string> succ_owner;
    for (const auto& f : kept) {
        for (std::size_t i = 0; i + 1 < f.path.size(); ++i) {
            const std::string &j = f.path[i], &h = f.path[i + 1];
            auto it = succ.find(j);
            if (it == succ.end()) {
                succ[j] = h;
                succ_owner[j] = f.id;
            } else if (it->second != h) {
                // Locate where the two diverging flows meet again, if they do.
                const std::string other = succ_owner[j];
                std::string rejoin;
                const Flow* fa = nullptr;
                const Flow* fb = nullptr;
                for (const auto& k : kept) {
                    if (k.id == f.id) fa = &k;
                    if (k.id == other) fb = &k;
                }
                if (fa && fb) {
                    const int ia = pos[fa->id][j], ib = pos[fb->id][j];
                    std::set<std::string> later_b(fb->path.begin() + ib + 1, fb->path.end());
                    for (std::size_t a2 = std::size_t(ia) + 1; a2 < fa->path.size(); ++a2)
                        if (later_b.count(fa->path[a2])) {
                            rejoin = fa->path[a2];
                            break;
                        }
                }
                std::string msg = "flow " + f.id + " and flow " + other +
                                  " diverge after server " + j;
                if (!rejoin.empty()) msg += " and rejoin at server " + rejoin;
                return NotTreeReducible{f.id, other, j, rejoin, msg};
            }
        }
    }
    const std::string root = foi->path.back();
    // Every remaining server must lead to the root along the successor map.
    for (const auto& s : used) {
        std::string u = s;
        std::set<std::string> seen{u};
        while (u != root) {
            auto it = succ.find(u);
            if (it == succ.end())
                return NotTreeReducible{"", "", u, "",
                                        "server " + u + " does not lead to the root " + root};
            u = it->second;
            if (!seen.insert(u).second)
                return NotTreeReducible{"", "", u, "", "cycle through server " + u};
        }
    }
    if (succ.count(root))
        return NotTreeReducible{"", "", root, "",
                                "root " + root + " has a successor; foi does not end last"};

    ReducedTree out;
    Network sub;
    for (const auto& s : net.servers)
        if (used.count(s.id)) sub.servers.push_back(s);
    sub.flows = kept;
    sub.foi = net.foi;
    for (const auto& sid : topological_servers(sub))
        out.servers.push_back(*sub.find_server(sid));
    out.flows = std::move(kept);
    for (std::size_t i = 0; i < out.flows.size(); ++i) {
        if (out.flows[i].id == net.foi) out.foi_index = i;
        for (const auto& sid : out.flows[i].path) out.crossing[sid].push_back(i);
    }
    out.root = root;
    out.successor = std::move(succ);
    return out;
}

inline Network to_network(const ReducedTree& tree,
                          std::vector<std::pair<std::string, std::string>> dependence_edges = {}) {
    Network net;
    net.servers = tree.servers;
    net.flows = tree.flows;
    net.foi = tree.flows[tree.foi_index].id;
    net.dependence_edges = std::move(dependence_edges);
    return net;
}

}  // namespace snc
