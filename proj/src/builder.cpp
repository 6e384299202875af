#include "cascade/builder.hpp"

#include <algorithm>
#include <numeric>

#include "cascade/util.hpp"

namespace cascade {

namespace {
constexpr Timestamp kNoTime = std::numeric_limits<Timestamp>::max();
}

struct CascadeBuilder::PendingCascade {
    std::unordered_map<std::string, NodeId> index;
    std::vector<std::string> names;
    std::vector<Timestamp> own_time;     // earliest event as actor
    std::vector<Timestamp> source_time;  // earliest retweet naming the user as source
    std::vector<std::size_t> source_line;
    std::unordered_map<std::uint64_t, std::uint32_t> edges;  // (u << 32 | v) -> weight
    NodeId root = 0;
    Timestamp root_time = 0;
    std::size_t root_events = 0;
    std::size_t first_line = 0;
    std::size_t second_root_line = 0;
    std::size_t accepted = 0;

    NodeId intern(const std::string& user) {
        auto [it, inserted] = index.try_emplace(user, static_cast<NodeId>(names.size()));
        if (inserted) {
            names.push_back(user);
            own_time.push_back(kNoTime);
            source_time.push_back(kNoTime);
            source_line.push_back(0);
        }
        return it->second;
    }
};

CascadeBuilder::CascadeBuilder() = default;
CascadeBuilder::~CascadeBuilder() = default;
CascadeBuilder::CascadeBuilder(CascadeBuilder&&) noexcept = default;
CascadeBuilder& CascadeBuilder::operator=(CascadeBuilder&&) noexcept = default;

void CascadeBuilder::add(const RetweetEvent& event, std::size_t line_number) {
    ++events_seen_;
    if (!seen_posts_.insert(fnv1a64(event.post_id)).second) {
        rejects_.push_back({line_number, "duplicate post_id '" + event.post_id + "'"});
        return;
    }
    auto& slot = pending_[event.cascade_id];
    if (!slot) {
        slot = std::make_unique<PendingCascade>();
        slot->first_line = line_number;
    }
    PendingCascade& c = *slot;
    const NodeId actor = c.intern(event.actor);
    c.own_time[actor] = std::min(c.own_time[actor], event.timestamp);
    if (!event.source) {
        if (++c.root_events == 1) {
            c.root = actor;
            c.root_time = event.timestamp;
        } else if (c.second_root_line == 0) {
            c.second_root_line = line_number;
        }
    } else {
        const NodeId src = c.intern(*event.source);
        if (event.timestamp < c.source_time[src]) {
            c.source_time[src] = event.timestamp;
            c.source_line[src] = line_number;
        }
        ++c.edges[(std::uint64_t{src} << 32) | actor];
    }
    ++c.accepted;
}

namespace {

struct Finalized {
    std::optional<CascadeGraph> graph;
    std::vector<RejectEntry> rejects;
    std::vector<RejectEntry> warnings;
    std::size_t accepted = 0;
};

}  // namespace

BuildResult CascadeBuilder::finish() {
    std::vector<std::pair<std::string, std::unique_ptr<PendingCascade>>> items;
    items.reserve(pending_.size());
    for (auto& [id, state] : pending_) items.emplace_back(id, std::move(state));
    pending_.clear();
    std::sort(items.begin(), items.end(),
              [](const auto& a, const auto& b) { return a.first < b.first; });

    std::vector<Finalized> done(items.size());
    const auto count = static_cast<std::int64_t>(items.size());
#pragma omp parallel for schedule(dynamic, 64)
    for (std::int64_t i = 0; i < count; ++i) {
        const std::string& id = items[i].first;
        PendingCascade& c = *items[i].second;
        Finalized& out = done[i];
        if (c.root_events == 0) {
            out.rejects.push_back({c.first_line, "cascade '" + id + "' has no original post"});
            items[i].second.reset();
            continue;
        }
        if (c.root_events > 1) {
            out.rejects.push_back({c.second_root_line, "cascade '" + id + "' has multiple original posts"});
            items[i].second.reset();
            continue;
        }

        // Root first, remaining users by id.
        const std::size_t n = c.names.size();
        std::vector<NodeId> order(n);
        std::iota(order.begin(), order.end(), NodeId{0});
        std::sort(order.begin(), order.end(), [&](NodeId a, NodeId b) {
            if ((a == c.root) != (b == c.root)) return a == c.root;
            return c.names[a] < c.names[b];
        });
        std::vector<NodeId> relabel(n);
        std::vector<std::string> users(n);
        std::vector<Timestamp> times(n);
        for (std::size_t k = 0; k < n; ++k) {
            const NodeId old = order[k];
            relabel[old] = static_cast<NodeId>(k);
            users[k] = std::move(c.names[old]);
            if (old == c.root) {
                times[k] = c.root_time;
            } else if (c.own_time[old] != kNoTime) {
                times[k] = c.own_time[old];
            } else {
                times[k] = c.source_time[old];
                out.warnings.push_back({c.source_line[old], "cascade '" + id + "': source user '" +
                                                               users[k] + "' has no own event; kept"});
            }
        }
        std::vector<Edge> edges;
        edges.reserve(c.edges.size());
        for (const auto& [key, w] : c.edges) {
            edges.push_back({relabel[static_cast<NodeId>(key >> 32)],
                             relabel[static_cast<NodeId>(key & 0xffffffffULL)], w});
        }
        out.accepted = c.accepted;
        out.graph.emplace(id, std::move(users), std::move(times), std::move(edges));
        items[i].second.reset();
    }

    BuildResult result;
    result.events_seen = events_seen_;
    result.rejects = std::move(rejects_);
    for (auto& f : done) {
        if (f.graph) result.cascades.push_back(std::move(*f.graph));
        result.events_accepted += f.accepted;
        for (auto& r : f.rejects) result.rejects.push_back(std::move(r));
        for (auto& w : f.warnings) result.warnings.push_back(std::move(w));
    }
    auto by_line = [](const RejectEntry& a, const RejectEntry& b) { return a.line_number < b.line_number; };
    std::stable_sort(result.rejects.begin(), result.rejects.end(), by_line);
    std::stable_sort(result.warnings.begin(), result.warnings.end(), by_line);

    seen_posts_.clear();
    rejects_.clear();
    events_seen_ = 0;
    return result;
}

BuildResult build_cascades(const std::vector<RetweetEvent>& events) {
    CascadeBuilder builder;
    for (std::size_t i = 0; i < events.size(); ++i) builder.add(events[i], i + 1);
    return builder.finish();
}

}  // namespace cascade
