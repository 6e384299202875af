#include "cascade/event_io.hpp"

#include <charconv>
#include <istream>
#include <ostream>

#include "cascade/util.hpp"

namespace cascade {

std::string format_double(double value) {
    char buf[64];
    auto [end, ec] = std::to_chars(buf, buf + sizeof buf, value);
    return ec == std::errc{} ? std::string(buf, end) : std::string("nan");
}

std::optional<RetweetEvent> parse_event_line(std::string_view line, std::size_t line_number) {
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    if (line.empty() || line.front() == '#') return std::nullopt;

    std::string_view fields[5];
    std::size_t n = 0;
    std::size_t start = 0;
    while (true) {
        const auto tab = line.find('\t', start);
        if (n == 5) throw ParseError(line_number, "expected 5 tab-separated fields, found more");
        fields[n++] = line.substr(start, tab == std::string_view::npos ? std::string_view::npos : tab - start);
        if (tab == std::string_view::npos) break;
        start = tab + 1;
    }
    if (n != 5)
        throw ParseError(line_number, "expected 5 tab-separated fields, found " + std::to_string(n));
    if (fields[0].empty()) throw ParseError(line_number, "empty cascade_id");
    if (fields[1].empty()) throw ParseError(line_number, "empty post_id");
    if (fields[2].empty()) throw ParseError(line_number, "empty actor");

    RetweetEvent ev;
    ev.cascade_id = fields[0];
    ev.post_id = fields[1];
    ev.actor = fields[2];
    if (!fields[3].empty()) ev.source = std::string(fields[3]);
    const auto ts = fields[4];
    auto [ptr, ec] = std::from_chars(ts.data(), ts.data() + ts.size(), ev.timestamp);
    if (ec != std::errc{} || ptr != ts.data() + ts.size())
        throw ParseError(line_number, "bad timestamp '" + std::string(ts) + "'");
    if (ev.timestamp < 0) throw ParseError(line_number, "negative timestamp");
    return ev;
}

std::string format_event_line(const RetweetEvent& e) {
    std::string out;
    out.reserve(e.cascade_id.size() + e.post_id.size() + e.actor.size() + 32);
    out += e.cascade_id;
    out += '\t';
    out += e.post_id;
    out += '\t';
    out += e.actor;
    out += '\t';
    if (e.source) out += *e.source;
    out += '\t';
    out += std::to_string(e.timestamp);
    return out;
}

std::size_t read_events(std::istream& in,
                        const std::function<void(const RetweetEvent&, std::size_t)>& sink) {
    std::string line;
    std::size_t line_number = 0;
    std::size_t events = 0;
    while (std::getline(in, line)) {
        ++line_number;
        if (auto ev = parse_event_line(line, line_number)) {
            sink(*ev, line_number);
            ++events;
        }
    }
    return events;
}

void write_events(std::ostream& out, const std::vector<RetweetEvent>& events) {
    for (const auto& e : events) out << format_event_line(e) << '\n';
}

void write_reject_report(std::ostream& out, const BuildResult& result) {
    out << "line_number\treason\n";
    for (const auto& r : result.rejects) out << r.line_number << '\t' << r.reason << '\n';
    for (const auto& w : result.warnings) out << w.line_number << "\twarning: " << w.reason << '\n';
}

}  // namespace cascade
