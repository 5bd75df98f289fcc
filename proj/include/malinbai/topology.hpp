#pragma once

#include <algorithm>
#include <istream>
#include <ostream>
#include <set>
#include <string>
#include <utility>
#include <vector>

#include <json.hpp>

#include "malinbai/errors.hpp"

namespace malinbai {

// Undirected agent network. Vertices are 0-based internally; the text file
// format and JSON use 1-based indices.
struct AgentGraph {
    int n = 0;
    std::set<std::pair<int, int>> edges;   // normalized u < v
    std::vector<std::vector<int>> adj;     // sorted neighbor lists
    bool connected = false;

    bool has_edge(int u, int v) const {
        if (u > v) std::swap(u, v);
        return edges.count({u, v}) > 0;
    }
};

inline AgentGraph make_graph(int n, const std::vector<std::pair<int, int>>& edge_list) {
    if (n < 1) throw Error("InvalidGraph", "graph needs at least one vertex");
    AgentGraph g;
    g.n = n;
    g.adj.resize(static_cast<std::size_t>(n));
    for (auto [u, v] : edge_list) {
        if (u == v) throw Error("InvalidGraph", "self-loop at vertex " + std::to_string(u + 1));
        if (u < 0 || v < 0 || u >= n || v >= n) {
            throw Error("InvalidGraph", "edge endpoint out of range");
        }
        if (u > v) std::swap(u, v);
        if (g.edges.insert({u, v}).second) {
            g.adj[static_cast<std::size_t>(u)].push_back(v);
            g.adj[static_cast<std::size_t>(v)].push_back(u);
        }
    }
    for (auto& nbrs : g.adj) std::sort(nbrs.begin(), nbrs.end());

    // BFS connectivity; recorded, not required.
    std::vector<bool> seen(static_cast<std::size_t>(n), false);
    std::vector<int> queue{0};
    seen[0] = true;
    for (std::size_t q = 0; q < queue.size(); ++q) {
        for (int w : g.adj[static_cast<std::size_t>(queue[q])]) {
            if (!seen[static_cast<std::size_t>(w)]) {
                seen[static_cast<std::size_t>(w)] = true;
                queue.push_back(w);
            }
        }
    }
    g.connected = static_cast<int>(queue.size()) == n;
    return g;
}

struct Partition {
    std::vector<std::vector<int>> blocks;  // sorted members, one block per hub
    std::vector<int> hubs;                 // hubs[i] is the dominant vertex of blocks[i]
};

// Greedy dominating set: repeatedly take the vertex covering the most
// uncovered vertices (closed neighborhood). Ties prefer a still-uncovered
// vertex, then the lowest index. Disconnected graphs are fine; isolated
// vertices dominate themselves.
inline std::vector<int> greedy_dominating_set(const AgentGraph& g) {
    std::vector<bool> covered(static_cast<std::size_t>(g.n), false);
    std::vector<bool> in_dom(static_cast<std::size_t>(g.n), false);
    int num_covered = 0;
    std::vector<int> dom;
    while (num_covered < g.n) {
        int best = -1, best_gain = 0;
        bool best_uncovered = false;
        for (int v = 0; v < g.n; ++v) {
            if (in_dom[static_cast<std::size_t>(v)]) continue;
            int gain = covered[static_cast<std::size_t>(v)] ? 0 : 1;
            for (int w : g.adj[static_cast<std::size_t>(v)]) {
                if (!covered[static_cast<std::size_t>(w)]) ++gain;
            }
            const bool v_uncovered = !covered[static_cast<std::size_t>(v)];
            if (gain > best_gain || (gain == best_gain && v_uncovered && !best_uncovered)) {
                best = v;
                best_gain = gain;
                best_uncovered = v_uncovered;
            }
        }
        in_dom[static_cast<std::size_t>(best)] = true;
        dom.push_back(best);
        if (!covered[static_cast<std::size_t>(best)]) {
            covered[static_cast<std::size_t>(best)] = true;
            ++num_covered;
        }
        for (int w : g.adj[static_cast<std::size_t>(best)]) {
            if (!covered[static_cast<std::size_t>(w)]) {
                covered[static_cast<std::size_t>(w)] = true;
                ++num_covered;
            }
        }
    }
    std::sort(dom.begin(), dom.end());
    return dom;
}

// Assign every non-dominant vertex to the lowest-index adjacent dominant
// vertex; one star-shaped block per hub.
inline Partition build_partition(const AgentGraph& g, const std::vector<int>& dom) {
    std::vector<int> hubs = dom;
    std::sort(hubs.begin(), hubs.end());
    hubs.erase(std::unique(hubs.begin(), hubs.end()), hubs.end());
    std::vector<int> hub_of(static_cast<std::size_t>(g.n), -1);
    for (int h : hubs) {
        if (h < 0 || h >= g.n) throw Error("InvalidGraph", "dominant vertex out of range");
        hub_of[static_cast<std::size_t>(h)] = h;
    }
    for (int v = 0; v < g.n; ++v) {
        if (hub_of[static_cast<std::size_t>(v)] == v) continue;
        for (int w : g.adj[static_cast<std::size_t>(v)]) {  // neighbors sorted ascending
            if (std::binary_search(hubs.begin(), hubs.end(), w)) {
                hub_of[static_cast<std::size_t>(v)] = w;
                break;
            }
        }
        if (hub_of[static_cast<std::size_t>(v)] < 0) {
            throw NotDominating("vertex " + std::to_string(v + 1) +
                                " has no adjacent dominant vertex");
        }
    }
    Partition p;
    p.hubs = hubs;
    p.blocks.resize(hubs.size());
    for (int v = 0; v < g.n; ++v) {
        const auto it = std::lower_bound(hubs.begin(), hubs.end(), hub_of[static_cast<std::size_t>(v)]);
        p.blocks[static_cast<std::size_t>(it - hubs.begin())].push_back(v);
    }
    return p;
}

struct ValidationReport {
    bool ok = true;
    std::string violation;  // first violation found, empty when ok

    explicit operator bool() const { return ok; }
};

// Check every partition invariant; returns instead of throwing.
inline ValidationReport validate_partition(const AgentGraph& g, const Partition& p) {
    auto fail = [](std::string what) { return ValidationReport{false, std::move(what)}; };
    if (p.blocks.size() != p.hubs.size()) {
        return fail("block/hub count mismatch");
    }
    std::vector<int> owner(static_cast<std::size_t>(g.n), -1);
    for (std::size_t b = 0; b < p.blocks.size(); ++b) {
        const int hub = p.hubs[b];
        if (hub < 0 || hub >= g.n) return fail("hub out of range");
        bool hub_in_block = false;
        for (int v : p.blocks[b]) {
            if (v < 0 || v >= g.n) return fail("block member out of range");
            if (owner[static_cast<std::size_t>(v)] >= 0) {
                return fail("disjointness: vertex " + std::to_string(v + 1) +
                            " appears in more than one block");
            }
            owner[static_cast<std::size_t>(v)] = static_cast<int>(b);
            if (v == hub) {
                hub_in_block = true;
            } else if (!g.has_edge(v, hub)) {
                return fail("hub adjacency: vertex " + std::to_string(v + 1) +
                            " is not adjacent to hub " + std::to_string(hub + 1));
            }
        }
        if (!hub_in_block) return fail("hub " + std::to_string(hub + 1) + " missing from its block");
    }
    for (int v = 0; v < g.n; ++v) {
        if (owner[static_cast<std::size_t>(v)] < 0) {
            return fail("coverage: vertex " + std::to_string(v + 1) + " belongs to no block");
        }
    }
    return {};
}

// ---------------------------------------------------------------------------
// File formats

// Plain-text edge list: first line "n <count>", then one "u v" pair per
// line, 1-based.
inline AgentGraph graph_from_stream(std::istream& in) {
    std::string tag;
    int n = 0;
    if (!(in >> tag >> n) || tag != "n") {
        throw Error("MalformedFile", "graph file must start with 'n <count>'");
    }
    std::vector<std::pair<int, int>> edges;
    int u = 0, v = 0;
    while (in >> u >> v) edges.emplace_back(u - 1, v - 1);
    return make_graph(n, edges);
}

inline void graph_to_stream(const AgentGraph& g, std::ostream& out) {
    out << "n " << g.n << "\n";
    for (const auto& [u, v] : g.edges) out << u + 1 << " " << v + 1 << "\n";
}

inline nlohmann::ordered_json partition_to_json(const Partition& p) {
    nlohmann::ordered_json j;
    auto blocks = nlohmann::ordered_json::array();
    for (const auto& block : p.blocks) {
        auto row = nlohmann::ordered_json::array();
        for (int v : block) row.push_back(v + 1);
        blocks.push_back(std::move(row));
    }
    j["blocks"] = std::move(blocks);
    auto hubs = nlohmann::ordered_json::array();
    for (int h : p.hubs) hubs.push_back(h + 1);
    j["hubs"] = std::move(hubs);
    return j;
}

inline Partition partition_from_json(const nlohmann::json& j) {
    Partition p;
    for (const auto& row : j.at("blocks")) {
        std::vector<int> block;
        for (const auto& v : row) block.push_back(v.get<int>() - 1);
        std::sort(block.begin(), block.end());
        p.blocks.push_back(std::move(block));
    }
    for (const auto& h : j.at("hubs")) p.hubs.push_back(h.get<int>() - 1);
    return p;
}

}  // namespace malinbai
