#pragma once

#include <array>
#include <cstdint>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/graph.hpp"

namespace cascade {

/// Breadth histogram B(D), D = 0..L, over root-reachable nodes.
struct Silhouette {
    std::vector<std::uint64_t> breadth_by_depth;
};

Silhouette silhouette(const DepthAssignment& depths);

struct SizeMetrics {
    std::uint64_t mass = 0;
    std::uint64_t length = 0;
    std::uint64_t breadth = 0;
};

SizeMetrics size_metrics(const CascadeGraph& graph, const DepthAssignment& depths);

/// A metric value plus a flag for inputs where the metric is defined by convention.
struct Measured {
    double value = 0.0;
    bool degenerate = false;
};

struct WienerOptions {
    std::size_t exact_threshold = 10'000;
    std::size_t sample_sources = 1'000;
    std::uint64_t seed = 0;
};

struct WienerResult {
    double value = 0.0;
    bool degenerate = false;  // fewer than two nodes in the root component
    bool sampled = false;
    std::size_t sources = 0;
};

/// Mean shortest-path distance over node pairs of the undirected simple view.
///
/// Loops and edge multiplicities are ignored. Only the connected component of
/// the root is considered (dangling sources can split a cascade). Components
/// larger than `exact_threshold` are estimated from `sample_sources` BFS roots
/// drawn without replacement, seeded by (seed, cascade id). BFS sources are
/// processed in parallel.
WienerResult wiener_trend(const CascadeGraph& graph, const WienerOptions& options = {});

Measured silhouette_fluctuation(const Silhouette& s);

double branch_deviation(const CascadeGraph& graph);
double converge_deviation(const CascadeGraph& graph);

/// Number of distinct non-loop edges (u,v) whose reverse (v,u) also exists.
std::uint64_t reciprocal_edge_count(const CascadeGraph& graph);
double reciprocity(const CascadeGraph& graph);

std::uint64_t self_loop_count(const CascadeGraph& graph);
double self_loop_ratio(const CascadeGraph& graph);

enum class ActivityConvention {
    retweets_only,   // sum of in-weights / |V|
    include_original // (retweets + original post) / |V|
};

double average_activity(const CascadeGraph& graph,
                        ActivityConvention convention = ActivityConvention::retweets_only);

struct DirectionFlags {
    bool has_converge = false;
    bool has_reciprocal = false;
    bool has_self_loop = false;

    /// "none", or the set flags joined by '+', e.g. "converge+self_loop".
    std::string key() const;
    friend bool operator==(const DirectionFlags&, const DirectionFlags&) = default;
};

DirectionFlags direction_flags(const CascadeGraph& graph);

struct MetricVector {
    std::uint64_t mass = 0;
    std::uint64_t length = 0;
    std::uint64_t breadth = 0;
    double trend = 0.0;
    double fluctuation = 0.0;
    double branch_deviation = 0.0;
    double converge_deviation = 0.0;
    double reciprocity = 0.0;
    double self_loop_ratio = 0.0;
    double avg_activity = 0.0;
    std::uint64_t reciprocal_edge_count = 0;
    std::uint64_t self_loop_count = 0;
    std::uint64_t retweet_count = 0;
    DirectionFlags flags;

    friend bool operator==(const MetricVector&, const MetricVector&) = default;
};

inline constexpr std::array<std::string_view, 13> kNumericMetricNames = {
    "mass",        "length",          "breadth",          "trend",
    "fluctuation", "branch_deviation", "converge_deviation", "reciprocity",
    "self_loop_ratio", "avg_activity", "reciprocal_edge_count", "self_loop_count",
    "retweet_count"};

/// Value of a numeric field by column name; throws std::invalid_argument for unknown names.
double metric_value(const MetricVector& m, std::string_view name);

struct MetricOptions {
    WienerOptions wiener;
    ActivityConvention activity = ActivityConvention::retweets_only;
};

MetricVector metric_vector(const CascadeGraph& graph, const MetricOptions& options = {});

/// Metric vectors for a corpus, in input order. Cascades are processed in
/// parallel; large cascades run one at a time with a parallel Wiener pass.
std::vector<MetricVector> compute_corpus_metrics(std::span<const CascadeGraph> corpus,
                                                 const MetricOptions& options = {});

using VennTally = std::map<std::string, std::uint64_t>;

VennTally venn_tally(std::span<const MetricVector> metrics);

/// In-memory form of the metric TSV.
struct MetricTable {
    std::vector<std::string> cascade_ids;
    std::vector<MetricVector> rows;
};

void write_metric_table(std::ostream& out, const MetricTable& table);
/// Throws ParseError on malformed rows.
MetricTable read_metric_table(std::istream& in);

void write_venn_json(std::ostream& out, const VennTally& tally);

namespace ref {

/// Single-threaded reference for cascade::wiener_trend.
WienerResult wiener_trend(const CascadeGraph& graph, const WienerOptions& options = {});

/// Single-threaded reference for cascade::compute_corpus_metrics.
std::vector<MetricVector> compute_corpus_metrics(std::span<const CascadeGraph> corpus,
                                                 const MetricOptions& options = {});

}  // namespace ref

}  // namespace cascade
