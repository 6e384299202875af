#include "cascade/metrics.hpp"

#include <algorithm>
#include <charconv>
#include <istream>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cascade/event_io.hpp"
#include "cascade/numeric.hpp"
#include "cascade/util.hpp"

namespace cascade {

Silhouette silhouette(const DepthAssignment& depths) {
    Silhouette s;
    s.breadth_by_depth.assign(depths.length + 1, 0);
    for (auto d : depths.depth)
        if (d != kUnreachable) ++s.breadth_by_depth[d];
    return s;
}

SizeMetrics size_metrics(const CascadeGraph& graph, const DepthAssignment& depths) {
    const Silhouette s = silhouette(depths);
    return {graph.node_count(), depths.length,
            *std::max_element(s.breadth_by_depth.begin(), s.breadth_by_depth.end())};
}

namespace {

/// Nodes of the root's undirected component, in increasing id order.
std::vector<NodeId> root_component(const CascadeGraph& g) {
    std::vector<char> seen(g.node_count(), 0);
    std::vector<NodeId> stack{g.root()};
    std::vector<NodeId> members;
    seen[g.root()] = 1;
    while (!stack.empty()) {
        const NodeId u = stack.back();
        stack.pop_back();
        members.push_back(u);
        for (NodeId v : g.undirected_neighbors(u)) {
            if (!seen[v]) {
                seen[v] = 1;
                stack.push_back(v);
            }
        }
    }
    std::sort(members.begin(), members.end());
    return members;
}

/// Sum of BFS distances from `source`; `dist` must be all kUnreachable on entry and is restored.
std::uint64_t bfs_distance_sum(const CascadeGraph& g, NodeId source, std::vector<std::uint32_t>& dist,
                               std::vector<NodeId>& queue) {
    queue.clear();
    queue.push_back(source);
    dist[source] = 0;
    std::uint64_t total = 0;
    for (std::size_t head = 0; head < queue.size(); ++head) {
        const NodeId u = queue[head];
        const std::uint32_t du = dist[u];
        total += du;
        for (NodeId v : g.undirected_neighbors(u)) {
            if (dist[v] == kUnreachable) {
                dist[v] = du + 1;
                queue.push_back(v);
            }
        }
    }
    for (NodeId u : queue) dist[u] = kUnreachable;
    return total;
}

struct WienerPlan {
    std::vector<NodeId> sources;
    std::size_t component = 0;
    bool sampled = false;
};

WienerPlan plan_wiener(const CascadeGraph& g, const WienerOptions& opt) {
    WienerPlan plan;
    std::vector<NodeId> members = root_component(g);
    plan.component = members.size();
    if (members.size() <= opt.exact_threshold || opt.sample_sources >= members.size()) {
        plan.sources = std::move(members);
        return plan;
    }
    plan.sampled = true;
    std::mt19937_64 rng(derive_seed(opt.seed, g.id()));
    const std::size_t s = std::max<std::size_t>(opt.sample_sources, 1);
    // Partial Fisher-Yates: the first s slots are a uniform sample without replacement.
    for (std::size_t i = 0; i < s; ++i) {
        std::uniform_int_distribution<std::size_t> pick(i, members.size() - 1);
        std::swap(members[i], members[pick(rng)]);
    }
    members.resize(s);
    std::sort(members.begin(), members.end());
    plan.sources = std::move(members);
    return plan;
}

WienerResult finish_wiener(const WienerPlan& plan, std::uint64_t total) {
    WienerResult r;
    r.sampled = plan.sampled;
    r.sources = plan.sources.size();
    if (plan.component < 2) {
        r.degenerate = true;
        return r;
    }
    r.value = static_cast<double>(total) /
              (static_cast<double>(plan.sources.size()) * static_cast<double>(plan.component - 1));
    return r;
}

}  // namespace

WienerResult wiener_trend(const CascadeGraph& g, const WienerOptions& opt) {
    const WienerPlan plan = plan_wiener(g, opt);
    const auto count = static_cast<std::int64_t>(plan.sources.size());
    std::uint64_t total = 0;
#pragma omp parallel reduction(+ : total)
    {
        std::vector<std::uint32_t> dist(g.node_count(), kUnreachable);
        std::vector<NodeId> queue;
        queue.reserve(g.node_count());
#pragma omp for schedule(dynamic, 16)
        for (std::int64_t i = 0; i < count; ++i) total += bfs_distance_sum(g, plan.sources[i], dist, queue);
    }
    return finish_wiener(plan, total);
}

WienerResult ref::wiener_trend(const CascadeGraph& g, const WienerOptions& opt) {
    const WienerPlan plan = plan_wiener(g, opt);
    std::vector<std::uint32_t> dist(g.node_count(), kUnreachable);
    std::vector<NodeId> queue;
    std::uint64_t total = 0;
    for (NodeId s : plan.sources) total += bfs_distance_sum(g, s, dist, queue);
    return finish_wiener(plan, total);
}

Measured silhouette_fluctuation(const Silhouette& s) {
    if (s.breadth_by_depth.size() < 2) return {0.0, true};
    std::vector<double> b(s.breadth_by_depth.begin(), s.breadth_by_depth.end());
    return {sample_cv(b), false};
}

namespace {

std::vector<double> out_degrees(const CascadeGraph& g) {
    std::vector<double> k(g.node_count(), 0.0);
    for (const Edge& e : g.edges())
        if (!e.is_loop()) k[e.source] += 1.0;
    return k;
}

std::vector<double> in_degrees(const CascadeGraph& g) {
    std::vector<double> k(g.node_count(), 0.0);
    for (const Edge& e : g.edges())
        if (!e.is_loop()) k[e.target] += 1.0;
    return k;
}

}  // namespace

double branch_deviation(const CascadeGraph& g) { return sample_cv(out_degrees(g)); }

double converge_deviation(const CascadeGraph& g) { return sample_cv(in_degrees(g)); }

std::uint64_t reciprocal_edge_count(const CascadeGraph& g) {
    const auto& edges = g.edges();
    std::uint64_t count = 0;
    for (const Edge& e : edges) {
        if (e.is_loop()) continue;
        const bool reverse = std::binary_search(
            edges.begin(), edges.end(), Edge{e.target, e.source, 1}, [](const Edge& a, const Edge& b) {
                return a.source != b.source ? a.source < b.source : a.target < b.target;
            });
        if (reverse) ++count;
    }
    return count;
}

double reciprocity(const CascadeGraph& g) {
    if (g.edge_count() == 0) return 0.0;
    return static_cast<double>(reciprocal_edge_count(g)) / static_cast<double>(g.edge_count());
}

std::uint64_t self_loop_count(const CascadeGraph& g) {
    return static_cast<std::uint64_t>(
        std::count_if(g.edges().begin(), g.edges().end(), [](const Edge& e) { return e.is_loop(); }));
}

double self_loop_ratio(const CascadeGraph& g) {
    return static_cast<double>(self_loop_count(g)) / static_cast<double>(g.node_count());
}

double average_activity(const CascadeGraph& g, ActivityConvention convention) {
    const double posts = convention == ActivityConvention::retweets_only
                             ? static_cast<double>(g.retweet_count())
                             : static_cast<double>(g.post_count());
    return posts / static_cast<double>(g.node_count());
}

std::string DirectionFlags::key() const {
    std::string k;
    auto add = [&k](bool on, const char* name) {
        if (!on) return;
        if (!k.empty()) k += '+';
        k += name;
    };
    add(has_converge, "converge");
    add(has_reciprocal, "reciprocal");
    add(has_self_loop, "self_loop");
    return k.empty() ? "none" : k;
}

DirectionFlags direction_flags(const CascadeGraph& g) {
    const auto k_in = in_degrees(g);
    DirectionFlags f;
    f.has_converge = std::any_of(k_in.begin(), k_in.end(), [](double k) { return k >= 2.0; });
    f.has_reciprocal = reciprocal_edge_count(g) >= 1;
    f.has_self_loop = self_loop_count(g) >= 1;
    return f;
}

double metric_value(const MetricVector& m, std::string_view name) {
    if (name == "mass") return static_cast<double>(m.mass);
    if (name == "length") return static_cast<double>(m.length);
    if (name == "breadth") return static_cast<double>(m.breadth);
    if (name == "trend") return m.trend;
    if (name == "fluctuation") return m.fluctuation;
    if (name == "branch_deviation") return m.branch_deviation;
    if (name == "converge_deviation") return m.converge_deviation;
    if (name == "reciprocity") return m.reciprocity;
    if (name == "self_loop_ratio") return m.self_loop_ratio;
    if (name == "avg_activity") return m.avg_activity;
    if (name == "reciprocal_edge_count") return static_cast<double>(m.reciprocal_edge_count);
    if (name == "self_loop_count") return static_cast<double>(m.self_loop_count);
    if (name == "retweet_count") return static_cast<double>(m.retweet_count);
    throw std::invalid_argument("unknown metric '" + std::string(name) + "'");
}

namespace {

template <typename Wiener>
MetricVector metric_vector_with(const CascadeGraph& g, const MetricOptions& opt, Wiener&& wiener) {
    const DepthAssignment depths = compute_depths(g);
    const Silhouette s = silhouette(depths);
    MetricVector m;
    m.mass = g.node_count();
    m.length = depths.length;
    m.breadth = *std::max_element(s.breadth_by_depth.begin(), s.breadth_by_depth.end());
    m.trend = wiener(g, opt.wiener).value;
    m.fluctuation = silhouette_fluctuation(s).value;
    m.branch_deviation = branch_deviation(g);
    m.converge_deviation = converge_deviation(g);
    m.reciprocal_edge_count = reciprocal_edge_count(g);
    m.reciprocity = g.edge_count() == 0
                        ? 0.0
                        : static_cast<double>(m.reciprocal_edge_count) / static_cast<double>(g.edge_count());
    m.self_loop_count = self_loop_count(g);
    m.self_loop_ratio = static_cast<double>(m.self_loop_count) / static_cast<double>(g.node_count());
    m.avg_activity = average_activity(g, opt.activity);
    m.retweet_count = g.retweet_count();
    m.flags = direction_flags(g);
    return m;
}

constexpr std::size_t kLargeCascade = 4096;

}  // namespace

MetricVector metric_vector(const CascadeGraph& g, const MetricOptions& opt) {
    return metric_vector_with(g, opt, [](const CascadeGraph& x, const WienerOptions& o) {
        return cascade::wiener_trend(x, o);
    });
}

std::vector<MetricVector> compute_corpus_metrics(std::span<const CascadeGraph> corpus,
                                                 const MetricOptions& opt) {
    std::vector<MetricVector> out(corpus.size());
    std::vector<std::size_t> large;
    const auto count = static_cast<std::int64_t>(corpus.size());
    auto serial_wiener = [](const CascadeGraph& x, const WienerOptions& o) { return ref::wiener_trend(x, o); };
#pragma omp parallel for schedule(dynamic, 32)
    for (std::int64_t i = 0; i < count; ++i) {
        if (corpus[i].node_count() >= kLargeCascade) continue;
        out[i] = metric_vector_with(corpus[i], opt, serial_wiener);
    }
    for (std::size_t i = 0; i < corpus.size(); ++i)
        if (corpus[i].node_count() >= kLargeCascade) out[i] = metric_vector(corpus[i], opt);
    return out;
}

std::vector<MetricVector> ref::compute_corpus_metrics(std::span<const CascadeGraph> corpus,
                                                      const MetricOptions& opt) {
    std::vector<MetricVector> out;
    out.reserve(corpus.size());
    auto serial_wiener = [](const CascadeGraph& x, const WienerOptions& o) { return ref::wiener_trend(x, o); };
    for (const auto& g : corpus) out.push_back(metric_vector_with(g, opt, serial_wiener));
    return out;
}

VennTally venn_tally(std::span<const MetricVector> metrics) {
    VennTally tally;
    for (const auto& m : metrics) ++tally[m.flags.key()];
    return tally;
}

namespace {

constexpr std::array<std::string_view, 3> kFlagNames = {"has_converge", "has_reciprocal", "has_self_loop"};

template <typename T>
T parse_number(std::string_view field, std::size_t line, std::string_view column) {
    T value{};
    auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
    if (ec != std::errc{} || ptr != field.data() + field.size())
        throw ParseError(line, "bad value '" + std::string(field) + "' in column " + std::string(column));
    return value;
}

std::vector<std::string_view> split_tabs(std::string_view line) {
    std::vector<std::string_view> out;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        out.push_back(line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start));
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    return out;
}

}  // namespace

void write_metric_table(std::ostream& out, const MetricTable& table) {
    out << "cascade_id";
    for (auto name : kNumericMetricNames) out << '\t' << name;
    for (auto name : kFlagNames) out << '\t' << name;
    out << '\n';
    for (std::size_t i = 0; i < table.rows.size(); ++i) {
        const MetricVector& m = table.rows[i];
        out << table.cascade_ids[i] << '\t' << m.mass << '\t' << m.length << '\t' << m.breadth << '\t'
            << format_double(m.trend) << '\t' << format_double(m.fluctuation) << '\t'
            << format_double(m.branch_deviation) << '\t' << format_double(m.converge_deviation) << '\t'
            << format_double(m.reciprocity) << '\t' << format_double(m.self_loop_ratio) << '\t'
            << format_double(m.avg_activity) << '\t' << m.reciprocal_edge_count << '\t' << m.self_loop_count
            << '\t' << m.retweet_count << '\t' << int(m.flags.has_converge) << '\t'
            << int(m.flags.has_reciprocal) << '\t' << int(m.flags.has_self_loop) << '\n';
    }
}

MetricTable read_metric_table(std::istream& in) {
    MetricTable table;
    std::string line;
    std::size_t line_no = 0;
    if (!std::getline(in, line)) throw ParseError(1, "empty metric table");
    ++line_no;
    {
        std::string expected = "cascade_id";
        for (auto name : kNumericMetricNames) (expected += '\t') += name;
        for (auto name : kFlagNames) (expected += '\t') += name;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line != expected) throw ParseError(1, "unexpected metric table header");
    }
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        const auto f = split_tabs(line);
        if (f.size() != 17)
            throw ParseError(line_no, "expected 17 columns, found " + std::to_string(f.size()));
        MetricVector m;
        m.mass = parse_number<std::uint64_t>(f[1], line_no, "mass");
        m.length = parse_number<std::uint64_t>(f[2], line_no, "length");
        m.breadth = parse_number<std::uint64_t>(f[3], line_no, "breadth");
        m.trend = parse_number<double>(f[4], line_no, "trend");
        m.fluctuation = parse_number<double>(f[5], line_no, "fluctuation");
        m.branch_deviation = parse_number<double>(f[6], line_no, "branch_deviation");
        m.converge_deviation = parse_number<double>(f[7], line_no, "converge_deviation");
        m.reciprocity = parse_number<double>(f[8], line_no, "reciprocity");
        m.self_loop_ratio = parse_number<double>(f[9], line_no, "self_loop_ratio");
        m.avg_activity = parse_number<double>(f[10], line_no, "avg_activity");
        m.reciprocal_edge_count = parse_number<std::uint64_t>(f[11], line_no, "reciprocal_edge_count");
        m.self_loop_count = parse_number<std::uint64_t>(f[12], line_no, "self_loop_count");
        m.retweet_count = parse_number<std::uint64_t>(f[13], line_no, "retweet_count");
        m.flags.has_converge = parse_number<int>(f[14], line_no, "has_converge") != 0;
        m.flags.has_reciprocal = parse_number<int>(f[15], line_no, "has_reciprocal") != 0;
        m.flags.has_self_loop = parse_number<int>(f[16], line_no, "has_self_loop") != 0;
        table.cascade_ids.emplace_back(f[0]);
        table.rows.push_back(m);
    }
    return table;
}

void write_venn_json(std::ostream& out, const VennTally& tally) {
    nlohmann::ordered_json j = nlohmann::ordered_json::object();
    for (const auto& [key, count] : tally) j[key] = count;
    out << j.dump(2) << '\n';
}

}  // namespace cascade
