#pragma once

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace cascade {

using NodeId = std::uint32_t;
using Timestamp = std::int64_t;

/// One line of the retweet log. `source` is empty for the original post.
struct RetweetEvent {
    std::string cascade_id;
    std::string post_id;
    std::string actor;
    std::optional<std::string> source;
    Timestamp timestamp = 0;

    friend bool operator==(const RetweetEvent&, const RetweetEvent&) = default;
};

/// Aggregated directed edge u -> v (v retweeted u `weight` times).
struct Edge {
    NodeId source = 0;
    NodeId target = 0;
    std::uint32_t weight = 1;

    bool is_loop() const { return source == target; }
    friend bool operator==(const Edge&, const Edge&) = default;
};

/// Weighted directed multigraph of a single cascade.
///
/// Nodes are densely indexed. The original poster is always node 0; the
/// remaining users are ordered by user id so that the graph does not depend
/// on the order events arrived in. Edges are sorted by (source, target) and
/// each ordered pair appears once, carrying its multiplicity as weight.
class CascadeGraph {
public:
    CascadeGraph() = default;
    CascadeGraph(std::string cascade_id, std::vector<std::string> users,
                 std::vector<Timestamp> infection_times, std::vector<Edge> edges);

    const std::string& id() const { return cascade_id_; }
    NodeId root() const { return 0; }
    std::size_t node_count() const { return users_.size(); }
    std::size_t edge_count() const { return edges_.size(); }

    const std::vector<std::string>& users() const { return users_; }
    const std::vector<Timestamp>& infection_times() const { return times_; }
    const std::vector<Edge>& edges() const { return edges_; }

    Timestamp root_time() const { return times_.front(); }

    /// Sum of edge weights, i.e. the number of retweet events.
    std::uint64_t retweet_count() const { return retweets_; }
    /// Retweets plus the original post.
    std::uint64_t post_count() const { return retweets_ + 1; }

    /// CSR out-neighbours (distinct targets, loops included).
    std::span<const NodeId> out_neighbors(NodeId u) const {
        return {out_targets_.data() + out_offsets_[u], out_targets_.data() + out_offsets_[u + 1]};
    }
    /// CSR undirected neighbours (distinct, loops removed).
    std::span<const NodeId> undirected_neighbors(NodeId u) const {
        return {und_targets_.data() + und_offsets_[u], und_targets_.data() + und_offsets_[u + 1]};
    }

    friend bool operator==(const CascadeGraph& a, const CascadeGraph& b) {
        return a.cascade_id_ == b.cascade_id_ && a.users_ == b.users_ && a.times_ == b.times_ &&
               a.edges_ == b.edges_;
    }

private:
    void build_adjacency();

    std::string cascade_id_;
    std::vector<std::string> users_;
    std::vector<Timestamp> times_;
    std::vector<Edge> edges_;
    std::uint64_t retweets_ = 0;

    std::vector<std::uint32_t> out_offsets_;
    std::vector<NodeId> out_targets_;
    std::vector<std::uint32_t> und_offsets_;
    std::vector<NodeId> und_targets_;
};

inline constexpr std::uint32_t kUnreachable = std::numeric_limits<std::uint32_t>::max();

struct DepthAssignment {
    std::vector<std::uint32_t> depth;  // kUnreachable for nodes not reachable from the root
    std::uint32_t length = 0;

    bool reachable(NodeId u) const { return depth[u] != kUnreachable; }
};

/// BFS over directed edges from the root. Loops never shorten a path and are skipped.
DepthAssignment compute_depths(const CascadeGraph& graph);

struct GrowthSeries {
    std::vector<std::uint64_t> counts;  // newly infected users per time bucket
    Timestamp time_unit = 1;
    Timestamp lifetime = 0;
    bool degenerate = false;            // zero lifetime
};

/// Histogram of infection times relative to the original post.
///
/// Bucket i covers [i * time_unit, (i + 1) * time_unit). Lifetime is the
/// latest infection time minus the post time, so the histogram always has
/// floor(lifetime / time_unit) + 1 buckets and sums to the node count.
GrowthSeries growth_series(const CascadeGraph& graph, Timestamp time_unit);

}  // namespace cascade
