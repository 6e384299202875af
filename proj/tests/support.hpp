#pragma once

// Independent oracles and small graph factories shared by the tests.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <string>
#include <utility>
#include <vector>

#include "cascade/builder.hpp"
#include "cascade/graph.hpp"

namespace oracle {

using cascade::CascadeGraph;
using cascade::Edge;
using cascade::NodeId;
using cascade::RetweetEvent;

/// Graph straight from an edge list, bypassing the builder. Users are "n0", "n1", ...
/// (zero padded so sorting keeps index order).
inline CascadeGraph make_graph(std::size_t n, std::vector<std::pair<NodeId, NodeId>> pairs,
                               std::string id = "g") {
    std::vector<std::string> users;
    for (std::size_t i = 0; i < n; ++i) {
        std::string s = std::to_string(i);
        users.push_back("n" + std::string(6 - s.size(), '0') + s);
    }
    std::vector<cascade::Timestamp> times(n);
    for (std::size_t i = 0; i < n; ++i) times[i] = static_cast<cascade::Timestamp>(i);
    std::vector<Edge> edges;
    for (auto [u, v] : pairs) {
        auto it = std::find_if(edges.begin(), edges.end(), [&](const Edge& e) { return e.source == u && e.target == v; });
        if (it == edges.end())
            edges.push_back({u, v, 1});
        else
            ++it->weight;
    }
    return CascadeGraph(std::move(id), std::move(users), std::move(times), std::move(edges));
}

inline CascadeGraph tree_from_parents(const std::vector<NodeId>& parent, std::string id = "t") {
    std::vector<std::pair<NodeId, NodeId>> pairs;
    for (std::size_t v = 1; v < parent.size(); ++v) pairs.emplace_back(parent[v], static_cast<NodeId>(v));
    return make_graph(parent.size(), pairs, std::move(id));
}

inline std::vector<NodeId> random_parents(std::size_t n, std::mt19937_64& rng) {
    std::vector<NodeId> parent(n, 0);
    for (std::size_t v = 1; v < n; ++v) {
        std::uniform_int_distribution<std::size_t> pick(0, v - 1);
        parent[v] = static_cast<NodeId>(pick(rng));
    }
    return parent;
}

/// Mean pairwise distance over the root's undirected component, by Floyd-Warshall.
inline double floyd_warshall_trend(const CascadeGraph& g) {
    const std::size_t n = g.node_count();
    const double inf = std::numeric_limits<double>::infinity();
    std::vector<double> d(n * n, inf);
    for (std::size_t i = 0; i < n; ++i) d[i * n + i] = 0;
    for (const Edge& e : g.edges()) {
        if (e.source == e.target) continue;
        d[e.source * n + e.target] = 1;
        d[e.target * n + e.source] = 1;
    }
    for (std::size_t k = 0; k < n; ++k)
        for (std::size_t i = 0; i < n; ++i)
            for (std::size_t j = 0; j < n; ++j)
                if (d[i * n + k] + d[k * n + j] < d[i * n + j]) d[i * n + j] = d[i * n + k] + d[k * n + j];
    std::vector<std::size_t> comp;
    for (std::size_t i = 0; i < n; ++i)
        if (d[i] < inf) comp.push_back(i);
    if (comp.size() < 2) return 0.0;
    long double total = 0;
    for (std::size_t a : comp)
        for (std::size_t b : comp)
            if (a != b) total += d[a * n + b];
    return static_cast<double>(total / (static_cast<long double>(comp.size()) * (comp.size() - 1)));
}

/// Sample coefficient of variation, computed in long double with the textbook formula.
inline double brute_cv(const std::vector<double>& xs) {
    if (xs.size() < 2) return 0.0;
    long double s = 0, ss = 0;
    for (double x : xs) {
        s += x;
        ss += static_cast<long double>(x) * x;
    }
    const long double n = xs.size();
    const long double m = s / n;
    const long double var = (ss - n * m * m) / (n - 1);
    if (var <= 1e-30L) return 0.0;
    return static_cast<double>(std::sqrt(var) / m);
}

/// Shortest directed path length from the root by exhaustive simple-path enumeration.
inline std::vector<std::uint32_t> enumerate_depths(const CascadeGraph& g) {
    const std::size_t n = g.node_count();
    std::vector<std::uint32_t> best(n, cascade::kUnreachable);
    std::vector<char> on_path(n, 0);
    auto dfs = [&](auto&& self, NodeId u, std::uint32_t len) -> void {
        best[u] = std::min(best[u], len);
        on_path[u] = 1;
        for (const Edge& e : g.edges())
            if (e.source == u && e.target != u && !on_path[e.target]) self(self, e.target, len + 1);
        on_path[u] = 0;
    };
    dfs(dfs, g.root(), 0);
    return best;
}

/// Pair-counting adjusted Rand index, O(n^2).
inline double pair_count_ari(const std::vector<std::uint32_t>& a, const std::vector<std::uint32_t>& b) {
    const std::size_t n = a.size();
    double both = 0, only_a = 0, only_b = 0, neither = 0;
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = i + 1; j < n; ++j) {
            const bool sa = a[i] == a[j], sb = b[i] == b[j];
            if (sa && sb)
                both += 1;
            else if (sa)
                only_a += 1;
            else if (sb)
                only_b += 1;
            else
                neither += 1;
        }
    }
    const double total = both + only_a + only_b + neither;
    const double pa = both + only_a, pb = both + only_b;
    const double expected = pa * pb / total;
    const double max_index = 0.5 * (pa + pb);
    if (max_index == expected) return 1.0;
    return (both - expected) / (max_index - expected);
}

/// Central-difference gradient of c1 (x + x0)^-alpha + c2 exp(-lambda x^beta) in long double.
/// Each parameter is differenced through the only term that contains it, so a
/// dominant other term cannot swamp the difference in rounding error.
inline std::array<double, 6> bimodal_fd_gradient(double x, const std::array<double, 6>& p) {
    using ld = long double;
    auto power = [&](const std::array<ld, 6>& q) { return q[0] * std::pow(static_cast<ld>(x) + q[1], -q[2]); };
    auto stretched = [&](const std::array<ld, 6>& q) { return q[3] * std::exp(-q[4] * std::pow(static_cast<ld>(x), q[5])); };
    std::array<double, 6> g{};
    for (std::size_t j = 0; j < 6; ++j) {
        std::array<ld, 6> hi, lo;
        for (std::size_t k = 0; k < 6; ++k) hi[k] = lo[k] = p[k];
        const ld h = 1e-8L * std::max(std::abs(static_cast<ld>(p[j])), 1e-3L);
        hi[j] += h;
        lo[j] -= h;
        const ld d = j < 3 ? power(hi) - power(lo) : stretched(hi) - stretched(lo);
        g[j] = static_cast<double>(d / (2 * h));
    }
    return g;
}

inline RetweetEvent event(std::string cascade, std::string post, std::string actor, std::string source,
                          cascade::Timestamp t) {
    RetweetEvent e;
    e.cascade_id = std::move(cascade);
    e.post_id = std::move(post);
    e.actor = std::move(actor);
    if (!source.empty()) e.source = std::move(source);
    e.timestamp = t;
    return e;
}

}  // namespace oracle
