#pragma once

// Brute-force reference implementations the optimized code is checked against.

#include "lightkg/evaluation.hpp"
#include "lightkg/graph.hpp"

#include <algorithm>
#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

namespace lightkg::testing {

struct Arc {
    std::string to;
    std::string edge;
};

inline std::map<std::string, std::vector<Arc>> adjacency(const KnowledgeGraph& g, bool undirected,
                                                         const std::set<std::string>& excluded = {}) {
    std::map<std::string, std::vector<Arc>> adj;
    for (const auto& [id, _] : g.nodes()) adj[id];
    for (const auto& [id, e] : g.edges()) {
        if (excluded.count(id) > 0) continue;
        adj[e.source].push_back({e.target, id});
        if (undirected && e.source != e.target) adj[e.target].push_back({e.source, id});
    }
    return adj;
}

// Plain single-source BFS distance in edges; nullopt when unreachable.
inline std::optional<std::size_t> bfs_distance(const KnowledgeGraph& g, const std::string& s, const std::string& t,
                                               bool undirected, const std::set<std::string>& excluded = {}) {
    const auto adj = adjacency(g, undirected, excluded);
    std::map<std::string, std::size_t> dist{{s, 0}};
    std::deque<std::string> queue{s};
    while (!queue.empty()) {
        const std::string u = queue.front();
        queue.pop_front();
        if (u == t) return dist[u];
        for (const auto& a : adj.at(u)) {
            if (dist.emplace(a.to, dist[u] + 1).second) queue.push_back(a.to);
        }
    }
    return std::nullopt;
}

struct RawPath {
    std::vector<std::string> nodes;
    std::vector<std::string> edges;
};

// Every simple path from s to t with at most max_len edges (exponential).
inline std::vector<RawPath> all_simple_paths(const KnowledgeGraph& g, const std::string& s, const std::string& t,
                                             std::size_t max_len, bool undirected,
                                             const std::set<std::string>& excluded = {}) {
    const auto adj = adjacency(g, undirected, excluded);
    std::vector<RawPath> out;
    RawPath cur{{s}, {}};
    std::set<std::string> on_path{s};
    std::function<void(const std::string&)> dfs = [&](const std::string& u) {
        if (cur.edges.size() == max_len) return;
        for (const auto& a : adj.at(u)) {
            if (on_path.count(a.to) > 0) continue;
            cur.nodes.push_back(a.to);
            cur.edges.push_back(a.edge);
            if (a.to == t) {
                out.push_back(cur);
            } else {
                on_path.insert(a.to);
                dfs(a.to);
                on_path.erase(a.to);
            }
            cur.nodes.pop_back();
            cur.edges.pop_back();
        }
    };
    if (s != t) dfs(s);
    return out;
}

// Among shortest simple paths: smallest node sequence, then smallest edge
// sequence (parallel edges resolve to the smallest id).
inline std::optional<RawPath> canonical_shortest_path(const KnowledgeGraph& g, const std::string& s,
                                                      const std::string& t, std::size_t max_len, bool undirected,
                                                      const std::set<std::string>& excluded = {}) {
    auto paths = all_simple_paths(g, s, t, max_len, undirected, excluded);
    if (paths.empty()) return std::nullopt;
    return *std::min_element(paths.begin(), paths.end(), [](const RawPath& a, const RawPath& b) {
        if (a.edges.size() != b.edges.size()) return a.edges.size() < b.edges.size();
        if (a.nodes != b.nodes) return a.nodes < b.nodes;
        return a.edges < b.edges;
    });
}

struct NaiveScores {
    double p = 0, r = 0, f1 = 0;
};

inline NaiveScores naive_f1(const std::set<std::string>& predicted, const std::set<std::string>& gold) {
    std::size_t tp = 0;
    for (const auto& x : predicted) tp += gold.count(x);
    NaiveScores s;
    if (!predicted.empty()) s.p = double(tp) / double(predicted.size());
    if (!gold.empty()) s.r = double(tp) / double(gold.size());
    if (s.p + s.r > 0) s.f1 = 2 * s.p * s.r / (s.p + s.r);
    return s;
}

inline std::string triple_key(const std::string& s, const std::string& p, const std::string& o) {
    return s + '\x1f' + p + '\x1f' + o;
}

}  // namespace lightkg::testing
