#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <unordered_map>
#include <unordered_set>
#include <vector>

#include "cascade/graph.hpp"

namespace cascade {

struct RejectEntry {
    std::size_t line_number = 0;
    std::string reason;
};

struct BuildResult {
    std::vector<CascadeGraph> cascades;  // sorted by cascade id
    std::vector<RejectEntry> rejects;    // events or whole cascades that were dropped
    std::vector<RejectEntry> warnings;   // kept, but worth reporting (dangling sources)
    std::size_t events_seen = 0;
    std::size_t events_accepted = 0;
};

/// Streaming assembler of cascades from an interleaved event log.
///
/// State is kept per cascade and per distinct user, with retweet
/// multiplicities folded into edge weights, so memory does not grow with
/// repeated retweets. Post ids are remembered as 64-bit digests to detect
/// duplicates.
class CascadeBuilder {
public:
    CascadeBuilder();
    ~CascadeBuilder();
    CascadeBuilder(CascadeBuilder&&) noexcept;
    CascadeBuilder& operator=(CascadeBuilder&&) noexcept;

    void add(const RetweetEvent& event, std::size_t line_number);

    /// Finalizes every cascade. The builder is empty afterwards.
    BuildResult finish();

private:
    struct PendingCascade;

    std::unordered_map<std::string, std::unique_ptr<PendingCascade>> pending_;
    std::unordered_set<std::uint64_t> seen_posts_;
    std::vector<RejectEntry> rejects_;
    std::size_t events_seen_ = 0;
};

/// Convenience wrapper: line numbers are positions in `events` (1-based).
BuildResult build_cascades(const std::vector<RetweetEvent>& events);

}  // namespace cascade
