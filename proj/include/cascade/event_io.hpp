#pragma once

#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/builder.hpp"
#include "cascade/graph.hpp"

namespace cascade {

/// Malformed input, anchored to a 1-based line number.
class ParseError : public std::runtime_error {
public:
    ParseError(std::size_t line, const std::string& what)
        : std::runtime_error("line " + std::to_string(line) + ": " + what), line_(line) {}
    std::size_t line() const { return line_; }

private:
    std::size_t line_;
};

/// Parses `cascade_id<TAB>post_id<TAB>actor<TAB>source<TAB>timestamp`.
/// Blank lines and lines starting with '#' yield nullopt.
std::optional<RetweetEvent> parse_event_line(std::string_view line, std::size_t line_number);

std::string format_event_line(const RetweetEvent& event);

/// Calls `sink(event, line_number)` for every event line. Returns the number of events.
std::size_t read_events(std::istream& in,
                        const std::function<void(const RetweetEvent&, std::size_t)>& sink);

void write_events(std::ostream& out, const std::vector<RetweetEvent>& events);

/// (line_number, reason) TSV with a header row.
void write_reject_report(std::ostream& out, const BuildResult& result);

}  // namespace cascade
