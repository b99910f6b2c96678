// Comparison analyses: sequential SFA, simultaneous SFA, and seqPMOO.
//
// All three assemble AnalysisViews out of per-hop propagated output bounds;
// dependence between view instances is detected through shared derivation
// sources and handled by per-component Hoelder exponents. The sequential
// variant folds services hop by hop in (sigma, rho) form and pays the
// sequencing penalty; the simultaneous variant keeps the full multi-pole
// extraction; seqPMOO enumerates convolve/subtract orderings on a tandem.
#pragma once

#include <algorithm>
#include <functional>
#include <map>
#include <set>
#include <stdexcept>
#include <string>
#include <vector>

#include "snc/analysis.hpp"
#include "snc/dependence.hpp"
#include "snc/pmoo.hpp"
#include "snc/transforms.hpp"

namespace snc {

// Dependence components over the instances of a view (edge whenever two
// instances share a derivation source). Source ids are expected to be
// canonical already.
inline std::vector<std::vector<std::string>> instance_components(const AnalysisView& view) {
    std::vector<std::pair<std::string, std::vector<std::string>>> inst;
    for (const auto& a : view.arrivals) inst.emplace_back(a.pid, a.sources);
    for (const auto& s : view.servers) inst.emplace_back(s.service.pid, s.service.sources);
    std::vector<std::string> vertices;
    std::vector<std::pair<std::string, std::string>> edges;
    for (const auto& [pid, _] : inst) vertices.push_back(pid);
    for (std::size_t i = 0; i < inst.size(); ++i) {
        const std::set<std::string> si(inst[i].second.begin(), inst[i].second.end());
        for (std::size_t j = i + 1; j < inst.size(); ++j)
            for (const auto& s : inst[j].second)
                if (si.count(s)) {
                    edges.emplace_back(inst[i].first, inst[j].first);
                    break;
                }
    }
    return build_dependency_graph(std::move(vertices), edges).nontrivial_components();
}

inline double view_theta_cap(const AnalysisView& view, double hard_cap = 50.0) {
    double cap = hard_cap;
    for (const auto& a : view.arrivals) cap = std::min(cap, a.env.theta_max());
    for (const auto& s : view.servers) cap = std::min(cap, s.service.env.theta_max());
    return cap;
}

// ---------------------------------------------------------------------------
// Separated flow analysis.
// ---------------------------------------------------------------------------

class SfaAnalysis {
public:
    explicit SfaAnalysis(const Network& net) : net_(net) {
        const auto bad = validate(net);
        if (!bad.empty()) throw std::invalid_argument("sfa: invalid network: " + bad.front());
        build_canonical_sources();
        const Flow* foi = net_.find_flow(net_.foi);
        view_.arrivals.push_back(
            {arrival_pid(foi->id), envelope(foi->arrival), canon_set(foi->source_set())});
        view_.foi_index = 0;
        for (const auto& sid : foi->path) {
            const Server* srv = net_.find_server(sid);
            ServerView sv;
            sv.service = {service_pid(sid), envelope(srv->service), {canon(service_pid(sid))}};
            sv.on_path = true;
            for (const auto& g : net_.flows) {
                if (g.id == net_.foi) continue;
                const int pos = position_of(g, sid);
                if (pos < 0) continue;
                view_.arrivals.push_back(arrival_at(g.id, std::size_t(pos), sid));
                sv.cross.push_back(view_.arrivals.size() - 1);
            }
            view_.servers.push_back(std::move(sv));
        }
        components_ = instance_components(view_);
    }

    const AnalysisView& view() const { return view_; }
    const std::vector<std::vector<std::string>>& components() const { return components_; }
    double theta_cap() const { return view_theta_cap(view_); }
    std::size_t hoelder_dimension() const { return free_dimension(components_); }

    // Simultaneous variant: deconvolution and the service convolution in one
    // tail-sum step, i.e. the routed closed-form extraction over the full
    // multi-pole residual product.
    double simultaneous_delay(double theta, const HoelderAssignment& a, double T) const {
        return delay_violation(residual_rates(view_, theta, a), T);
    }
    double simultaneous_backlog(double theta, const HoelderAssignment& a, double b) const {
        return backlog_violation(residual_rates(view_, theta, a), b);
    }

    // Sequential variant: every convolution immediately collapses back to an
    // affine (sigma, rho) service by folding the slower rate's geometric sum
    // into sigma; the delay extraction sees a single decay rate.
    double sequential_delay(double theta, const HoelderAssignment& a, double T) const {
        return sequential_bound(theta, a, T, /*delay=*/true);
    }
    double sequential_backlog(double theta, const HoelderAssignment& a, double b) const {
        return sequential_bound(theta, a, b, /*delay=*/false);
    }

private:
    double sequential_bound(double theta, const HoelderAssignment& a, double horizon,
                            bool delay) const {
        const ResidualRates rr = residual_rates(view_, theta, a);
        if (!rr.feasible) return kInf;
        // Per-server affine residuals come straight from the rates; the
        // per-step fold adds the sequencing penalty.
        double sigma_acc = 0.0, rho_acc = 0.0;
        bool first = true;
        double log_sigma_extra = 0.0;  // folds, accumulated as theta*sigma
        for (std::size_t j = 0; j < rr.on_path.size(); ++j) {
            const double rho_j = rr.on_path[j];
            if (first) {
                rho_acc = rho_j;
                first = false;
                continue;
            }
            double delta = std::abs(rho_acc - rho_j);
            const double scale = std::max({std::abs(rho_acc), std::abs(rho_j), 1.0});
            if (delta < 1e-9 * scale) delta = 1e-6 * scale;  // tie shift
            log_sigma_extra -= log1mexp(theta * delta);
            rho_acc = std::min(rho_acc, rho_j) - (std::abs(rho_acc - rho_j) < 1e-9 * scale
                                                      ? 1e-6 * scale
                                                      : 0.0);
        }
        (void)sigma_acc;
        if (!(rho_acc > rr.foi_rho)) return kInf;
        double log_v = theta * rr.foi_sigma + rr.log_prefactor + log_sigma_extra -
                       log1mexp(theta * (rho_acc - rr.foi_rho));
        log_v -= delay ? theta * rho_acc * horizon : theta * horizon;
        return clamp_probability(std::exp(log_v));
    }

    void build_canonical_sources() {
        std::map<std::string, std::string> parent;
        std::function<std::string(const std::string&)> find = [&](const std::string& x) {
            auto it = parent.find(x);
            if (it == parent.end() || it->second == x) return x;
            return it->second = find(it->second);
        };
        for (const auto& [p, q] : net_.dependence_edges) parent[find(p)] = find(q);
        for (const auto& f : net_.flows)
            for (const auto& s : f.source_set()) canon_[s] = find(s);
        for (const auto& s : net_.servers) {
            const auto pid = service_pid(s.id);
            canon_[pid] = find(pid);
        }
    }
    std::string canon(const std::string& pid) const {
        auto it = canon_.find(pid);
        return it == canon_.end() ? pid : it->second;
    }
    std::vector<std::string> canon_set(const std::vector<std::string>& pids) const {
        std::set<std::string> out;
        for (const auto& p : pids) out.insert(canon(p));
        return {out.begin(), out.end()};
    }

    int position_of(const Flow& f, const std::string& sid) const {
        for (std::size_t i = 0; i < f.path.size(); ++i)
            if (f.path[i] == sid) return int(i);
        return -1;
    }

    // Arrival instance of flow `fid` at the k-th server of its path (named
    // after the server it arrives at). k = 0 is the external envelope;
    // deeper instances propagate through one upstream hop at a time.
    ProcInstance arrival_at(const std::string& fid, std::size_t k, const std::string& at) {
        const auto key = std::make_pair(fid, int(k));
        auto it = memo_.find(key);
        if (it != memo_.end()) return it->second;
        const Flow* f = net_.find_flow(fid);
        ProcInstance inst;
        if (k == 0) {
            inst = {arrival_pid(fid), envelope(f->arrival), canon_set(f->source_set())};
        } else {
            const std::string& hop = f->path[k - 1];
            // Residual of the hop server for this flow subtracts every other
            // flow present there; the output bound is the departure envelope
            // of that one-server tree.
            ReducedTree micro;
            micro.servers.push_back(*net_.find_server(hop));
            micro.root = hop;
            Flow self;
            const auto self_inst = arrival_at(fid, k - 1, hop);
            self.id = fid + "@up";
            self.path = {hop};
            self.arrival = ArrivalModel::explicit_envelope(self_inst.env);
            self.sources = self_inst.sources;
            micro.flows.push_back(std::move(self));
            for (const auto& g : net_.flows) {
                if (g.id == fid) continue;
                const int pos = position_of(g, hop);
                if (pos < 0) continue;
                const auto gi = arrival_at(g.id, std::size_t(pos), hop);
                Flow cross;
                cross.id = g.id + "@" + hop;
                cross.path = {hop};
                cross.arrival = ArrivalModel::explicit_envelope(gi.env);
                cross.sources = gi.sources;
                micro.flows.push_back(std::move(cross));
            }
            micro.foi_index = 0;
            for (std::size_t i = 0; i < micro.flows.size(); ++i)
                micro.crossing[hop].push_back(i);
            // Inside a derived envelope the exponents are pinned (equal split
            // per dependent component); the free exponents live at the top.
            HoelderAssignment fixed;
            {
                AnalysisView mv = view_from_tree(micro);
                for (const auto& comp : instance_components(mv))
                    for (const auto& pid : comp) fixed.exponents[pid] = double(comp.size());
            }
            const auto dep = departure_envelope(micro, fixed);
            inst.pid = arrival_pid(fid) + "@" + at;
            inst.env = dep.env;
            std::set<std::string> src;
            for (const auto& fl : micro.flows)
                for (const auto& s : fl.sources) src.insert(s);
            src.insert(canon(service_pid(hop)));
            inst.sources.assign(src.begin(), src.end());
        }
        memo_.emplace(key, inst);
        return inst;
    }

    Network net_;
    AnalysisView view_;
    std::vector<std::vector<std::string>> components_;
    std::map<std::pair<std::string, int>, ProcInstance> memo_;
    std::map<std::string, std::string> canon_;
};

// ---------------------------------------------------------------------------
// seqPMOO: enumerate {convolve adjacent segments, subtract a flow inside a
// segment, output-hop a flow past the first server} orderings on a tandem,
// take the best resulting bound.
// ---------------------------------------------------------------------------

struct SeqPmooTerminal {
    AnalysisView view;
    std::vector<std::vector<std::string>> components;
    bool used_hop = false;
};

class SeqPmooAnalysis {
public:
    explicit SeqPmooAnalysis(const Network& net, std::size_t state_budget = 20000) {
        const Flow* foi = net.find_flow(net.foi);
        if (!foi) throw std::invalid_argument("seqpmoo: missing foi");
        if (foi->path.size() > 5)
            throw SearchBudgetExceeded("seqpmoo: more than 5 servers");
        // Tandem check: every server lies on the foi path, every cross flow
        // covers a contiguous stretch of it.
        std::map<std::string, int> index;
        for (std::size_t i = 0; i < foi->path.size(); ++i) index[foi->path[i]] = int(i);
        if (index.size() != net.servers.size())
            throw std::invalid_argument("seqpmoo: network is not a tandem along the foi");
        struct Cross {
            std::string id;
            int lo, hi;
            ProcInstance external;
        };
        std::vector<Cross> cross;
        for (const auto& g : net.flows) {
            if (g.id == net.foi) continue;
            int lo = 1 << 20, hi = -1;
            for (const auto& sid : g.path) {
                auto it = index.find(sid);
                if (it == index.end())
                    throw std::invalid_argument("seqpmoo: flow " + g.id + " leaves the tandem");
                lo = std::min(lo, it->second);
                hi = std::max(hi, it->second);
            }
            if (int(g.path.size()) != hi - lo + 1)
                throw std::invalid_argument("seqpmoo: flow " + g.id + " is not contiguous");
            cross.push_back({g.id, lo, hi,
                             {arrival_pid(g.id), envelope(g.arrival), g.source_set()}});
        }
        const int n = int(foi->path.size());
        foi_inst_ = {arrival_pid(foi->id), envelope(foi->arrival), foi->source_set()};
        servers_.clear();
        for (const auto& sid : foi->path) servers_.push_back(*net.find_server(sid));

        // Hop instances (flow output past server 0) are shared by all
        // orderings that use them.
        std::map<std::string, ProcInstance> hop_inst;
        for (const auto& c : cross) {
            if (c.lo != 0 || c.hi == 0) continue;
            hop_inst.emplace(c.id, make_hop_instance(net, c.id));
        }

        // DFS over states.
        struct FlowState {
            int lo, hi;      // remaining interval; lo > hi means done
            int charged_lo = -1, charged_hi = -1;
            bool hopped = false;
        };
        struct State {
            std::vector<int> seg;  // segment id per server index
            std::vector<FlowState> fs;
        };
        State init;
        init.seg.resize(std::size_t(n));
        for (int i = 0; i < n; ++i) init.seg[std::size_t(i)] = i;
        for (const auto& c : cross) init.fs.push_back({c.lo, c.hi, -1, -1, false});

        std::set<std::string> seen;
        std::set<std::string> terminal_keys;
        std::size_t states = 0;
        std::function<void(const State&)> dfs = [&](const State& st) {
            std::string key;
            for (int s : st.seg) key += char('a' + s);
            for (const auto& f : st.fs)
                key += "|" + std::to_string(f.lo) + "," + std::to_string(f.hi) + "," +
                       std::to_string(f.charged_lo) + "," + std::to_string(f.charged_hi) +
                       (f.hopped ? "h" : "");
            if (!seen.insert(key).second) return;
            if (++states > state_budget)
                throw SearchBudgetExceeded("seqpmoo: state budget exceeded");

            bool all_done = true;
            for (const auto& f : st.fs)
                if (f.lo <= f.hi) all_done = false;
            if (all_done) {
                std::string tkey;
                for (const auto& f : st.fs)
                    tkey += std::to_string(f.charged_lo) + "," + std::to_string(f.charged_hi) +
                            (f.hopped ? "h;" : ";");
                if (terminal_keys.insert(tkey).second)
                    terminals_.push_back(make_terminal(cross, hop_inst, st.fs));
                return;
            }
            // subtract: a pending flow whose interval sits inside one segment.
            for (std::size_t fi = 0; fi < st.fs.size(); ++fi) {
                const auto& f = st.fs[fi];
                if (f.lo > f.hi) continue;
                if (st.seg[std::size_t(f.lo)] == st.seg[std::size_t(f.hi)]) {
                    State nx = st;
                    int clo = f.lo, chi = f.hi;
                    while (clo > 0 && st.seg[std::size_t(clo - 1)] == st.seg[std::size_t(f.lo)])
                        --clo;
                    while (chi + 1 < n && st.seg[std::size_t(chi + 1)] == st.seg[std::size_t(f.hi)])
                        ++chi;
                    nx.fs[fi].charged_lo = clo;
                    nx.fs[fi].charged_hi = chi;
                    nx.fs[fi].lo = 1;
                    nx.fs[fi].hi = 0;
                    dfs(nx);
                }
            }
            // hop: a pending unhopped flow starting at server 0 while server 0
            // is still its own segment.
            for (std::size_t fi = 0; fi < st.fs.size(); ++fi) {
                const auto& f = st.fs[fi];
                if (f.lo != 0 || f.hi < 1 || f.hopped) continue;
                if (n > 1 && st.seg[0] == st.seg[1]) continue;
                State nx = st;
                nx.fs[fi].lo = 1;
                nx.fs[fi].hopped = true;
                nx.fs[fi].charged_lo = 0;  // external part pays at server 0
                nx.fs[fi].charged_hi = 0;
                dfs(nx);
            }
            // convolve: merge two adjacent segments.
            for (int i = 0; i + 1 < n; ++i) {
                if (st.seg[std::size_t(i)] == st.seg[std::size_t(i + 1)]) continue;
                State nx = st;
                const int a = st.seg[std::size_t(i)], b = st.seg[std::size_t(i + 1)];
                for (auto& s : nx.seg)
                    if (s == b) s = a;
                dfs(nx);
            }
        };
        dfs(init);
        prune_dominated();
    }

    const std::vector<SeqPmooTerminal>& terminals() const { return terminals_; }

private:
    // A hopped flow's arrival past server 0: the departure bound of the
    // one-server tree at server 0 loaded by everything crossing it.
    ProcInstance make_hop_instance(const Network& net, const std::string& fid) {
        ReducedTree micro;
        micro.servers.push_back(servers_[0]);
        micro.root = servers_[0].id;
        const Flow* f = net.find_flow(fid);
        Flow self = *f;
        self.path = {servers_[0].id};
        micro.flows.push_back(self);
        for (const auto& g : net.flows) {
            if (g.id == fid) continue;
            if (std::find(g.path.begin(), g.path.end(), servers_[0].id) == g.path.end())
                continue;
            Flow c = g;
            c.path = {servers_[0].id};
            micro.flows.push_back(c);
        }
        micro.foi_index = 0;
        for (std::size_t i = 0; i < micro.flows.size(); ++i)
            micro.crossing[servers_[0].id].push_back(i);
        HoelderAssignment fixed;  // constituents are external, independent
        const auto dep = departure_envelope(micro, fixed);
        ProcInstance inst;
        inst.pid = arrival_pid(fid) + "@hop";
        inst.env = dep.env;
        inst.sources = dep.sources;
        return inst;
    }

    template <typename Cross, typename FlowState>
    SeqPmooTerminal make_terminal(const std::vector<Cross>& cross,
                                  const std::map<std::string, ProcInstance>& hop_inst,
                                  const std::vector<FlowState>& fs) {
        SeqPmooTerminal t;
        t.view.arrivals.push_back(foi_inst_);
        t.view.foi_index = 0;
        struct Charge {
            std::size_t inst;
            int lo, hi;
        };
        std::vector<Charge> charges;
        for (std::size_t fi = 0; fi < cross.size(); ++fi) {
            if (fs[fi].hopped) {
                t.used_hop = true;
                // external part at server 0, derived part over the rest
                t.view.arrivals.push_back(cross[fi].external);
                charges.push_back({t.view.arrivals.size() - 1, 0, 0});
                t.view.arrivals.push_back(hop_inst.at(cross[fi].id));
                charges.push_back({t.view.arrivals.size() - 1, fs[fi].charged_lo == 0
                                                                   ? 1
                                                                   : fs[fi].charged_lo,
                                   fs[fi].charged_hi});
            } else {
                t.view.arrivals.push_back(cross[fi].external);
                charges.push_back({t.view.arrivals.size() - 1, fs[fi].charged_lo,
                                   fs[fi].charged_hi});
            }
        }
        for (std::size_t j = 0; j < servers_.size(); ++j) {
            ServerView sv;
            sv.service = {service_pid(servers_[j].id), envelope(servers_[j].service),
                          {service_pid(servers_[j].id)}};
            sv.on_path = true;
            for (const auto& c : charges)
                if (int(j) >= c.lo && int(j) <= c.hi) sv.cross.push_back(c.inst);
            t.view.servers.push_back(std::move(sv));
        }
        t.components = instance_components(t.view);
        return t;
    }

    // Drop terminals whose charge ranges are componentwise supersets of
    // another terminal's (charging more servers is never better).
    void prune_dominated() {
        auto ranges = [](const SeqPmooTerminal& t) {
            std::vector<std::vector<int>> per_server;
            for (const auto& sv : t.view.servers) {
                std::vector<int> ids(sv.cross.begin(), sv.cross.end());
                std::sort(ids.begin(), ids.end());
                per_server.push_back(ids);
            }
            return per_server;
        };
        std::vector<SeqPmooTerminal> kept;
        for (std::size_t i = 0; i < terminals_.size(); ++i) {
            bool dominated = false;
            const auto ri = ranges(terminals_[i]);
            for (std::size_t j = 0; j < terminals_.size() && !dominated; ++j) {
                if (i == j) continue;
                if (terminals_[i].used_hop != terminals_[j].used_hop) continue;
                if (terminals_[i].view.arrivals.size() != terminals_[j].view.arrivals.size())
                    continue;
                const auto rj = ranges(terminals_[j]);
                bool subset_all = true, strict = false;
                for (std::size_t s = 0; s < ri.size(); ++s) {
                    if (!std::includes(ri[s].begin(), ri[s].end(), rj[s].begin(), rj[s].end()))
                        subset_all = false;
                    if (ri[s].size() > rj[s].size()) strict = true;
                }
                dominated = subset_all && strict;
            }
            if (!dominated) kept.push_back(terminals_[i]);
        }
        terminals_ = std::move(kept);
    }

    ProcInstance foi_inst_;
    std::vector<Server> servers_;
    std::vector<SeqPmooTerminal> terminals_;
};

}  // namespace snc
