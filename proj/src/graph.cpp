#include "cascade/graph.hpp"

#include <algorithm>
#include <stdexcept>

namespace cascade {

CascadeGraph::CascadeGraph(std::string cascade_id, std::vector<std::string> users,
                           std::vector<Timestamp> infection_times, std::vector<Edge> edges)
    : cascade_id_(std::move(cascade_id)),
      users_(std::move(users)),
      times_(std::move(infection_times)),
      edges_(std::move(edges)) {
    if (users_.empty()) throw std::invalid_argument("cascade " + cascade_id_ + " has no nodes");
    if (times_.size() != users_.size())
        throw std::invalid_argument("cascade " + cascade_id_ + ": one infection time per node required");

    std::sort(edges_.begin(), edges_.end(), [](const Edge& a, const Edge& b) {
        return a.source != b.source ? a.source < b.source : a.target < b.target;
    });
    const auto n = users_.size();
    for (std::size_t i = 0; i < edges_.size(); ++i) {
        const Edge& e = edges_[i];
        if (e.source >= n || e.target >= n)
            throw std::invalid_argument("cascade " + cascade_id_ + ": edge endpoint out of range");
        if (e.weight == 0) throw std::invalid_argument("cascade " + cascade_id_ + ": zero edge weight");
        if (i > 0 && edges_[i - 1].source == e.source && edges_[i - 1].target == e.target)
            throw std::invalid_argument("cascade " + cascade_id_ + ": duplicate edge");
        retweets_ += e.weight;
    }
    build_adjacency();
}

void CascadeGraph::build_adjacency() {
    const auto n = users_.size();
    out_offsets_.assign(n + 1, 0);
    for (const Edge& e : edges_) ++out_offsets_[e.source + 1];
    for (std::size_t u = 0; u < n; ++u) out_offsets_[u + 1] += out_offsets_[u];
    // edges_ is sorted by source, so targets are already grouped.
    out_targets_.resize(edges_.size());
    for (std::size_t i = 0; i < edges_.size(); ++i) out_targets_[i] = edges_[i].target;

    std::vector<std::pair<NodeId, NodeId>> und;
    und.reserve(edges_.size() * 2);
    for (const Edge& e : edges_) {
        if (e.is_loop()) continue;
        und.emplace_back(e.source, e.target);
        und.emplace_back(e.target, e.source);
    }
    std::sort(und.begin(), und.end());
    und.erase(std::unique(und.begin(), und.end()), und.end());
    und_offsets_.assign(n + 1, 0);
    for (const auto& [u, v] : und) ++und_offsets_[u + 1];
    for (std::size_t u = 0; u < n; ++u) und_offsets_[u + 1] += und_offsets_[u];
    und_targets_.resize(und.size());
    for (std::size_t i = 0; i < und.size(); ++i) und_targets_[i] = und[i].second;
}

DepthAssignment compute_depths(const CascadeGraph& graph) {
    DepthAssignment result;
    result.depth.assign(graph.node_count(), kUnreachable);
    std::vector<NodeId> frontier{graph.root()};
    std::vector<NodeId> next;
    result.depth[graph.root()] = 0;
    std::uint32_t level = 0;
    while (!frontier.empty()) {
        next.clear();
        for (NodeId u : frontier) {
            for (NodeId v : graph.out_neighbors(u)) {
                if (result.depth[v] != kUnreachable) continue;  // also skips loops
                result.depth[v] = level + 1;
                next.push_back(v);
            }
        }
        if (!next.empty()) ++level;
        frontier.swap(next);
    }
    result.length = level;
    return result;
}

GrowthSeries growth_series(const CascadeGraph& graph, Timestamp time_unit) {
    if (time_unit <= 0) throw std::invalid_argument("time unit must be positive");
    GrowthSeries series;
    series.time_unit = time_unit;
    const Timestamp t0 = graph.root_time();
    Timestamp last = 0;
    for (Timestamp t : graph.infection_times()) last = std::max(last, t - t0);
    series.lifetime = last;
    series.degenerate = last == 0;
    series.counts.assign(static_cast<std::size_t>(last / time_unit) + 1, 0);
    for (Timestamp t : graph.infection_times()) {
        // Users recorded before the post (clock skew) fall into the first bucket.
        const Timestamp rel = std::max<Timestamp>(t - t0, 0);
        ++series.counts[static_cast<std::size_t>(rel / time_unit)];
    }
    return series;
}

}  // namespace cascade
