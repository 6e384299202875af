#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <random>
#include <sstream>

#include "cascade/builder.hpp"
#include "cascade/event_io.hpp"
#include "cascade/synth.hpp"
#include "support.hpp"

using namespace cascade;
using oracle::event;

TEST_CASE("singleton cascade") {
    auto r = build_cascades({event("1", "p1", "a", "", 0)});
    REQUIRE(r.cascades.size() == 1);
    const auto& g = r.cascades[0];
    CHECK(g.node_count() == 1);
    CHECK(g.edge_count() == 0);
    CHECK(g.post_count() == 1);
    CHECK(r.rejects.empty());
}

TEST_CASE("repeat retweets become edge weight") {
    auto r = build_cascades({event("1", "p1", "a", "", 0), event("1", "p2", "b", "a", 1), event("1", "p3", "b", "a", 2)});
    REQUIRE(r.cascades.size() == 1);
    const auto& g = r.cascades[0];
    CHECK(g.node_count() == 2);
    REQUIRE(g.edge_count() == 1);
    CHECK(g.edges()[0].source == 0);
    CHECK(g.edges()[0].target == 1);
    CHECK(g.edges()[0].weight == 2);
    CHECK(g.post_count() == 3);
    CHECK(g.infection_times() == std::vector<Timestamp>{0, 1});
}

TEST_CASE("root is node 0 and other users are sorted by id") {
    auto r = build_cascades({event("c", "1", "zed", "", 5), event("c", "2", "bob", "zed", 9),
                             event("c", "3", "amy", "bob", 7)});
    const auto& g = r.cascades.at(0);
    CHECK(g.users() == std::vector<std::string>{"zed", "amy", "bob"});
    CHECK(g.root_time() == 5);
    CHECK(g.infection_times() == std::vector<Timestamp>{5, 7, 9});
}

TEST_CASE("infection time is the earliest participation as actor") {
    auto r = build_cascades({event("c", "1", "r", "", 0), event("c", "2", "a", "r", 50), event("c", "3", "a", "r", 20),
                             event("c", "4", "b", "a", 30)});
    const auto& g = r.cascades.at(0);
    CHECK(g.infection_times() == std::vector<Timestamp>{0, 20, 30});
}

TEST_CASE("duplicate post ids are rejected individually") {
    auto r = build_cascades({event("c", "1", "r", "", 0), event("c", "2", "a", "r", 1), event("c", "2", "b", "r", 2)});
    REQUIRE(r.rejects.size() == 1);
    CHECK(r.rejects[0].line_number == 3);
    CHECK(r.rejects[0].reason.find("duplicate post_id") != std::string::npos);
    CHECK(r.cascades.at(0).node_count() == 2);
    CHECK(r.events_seen == 3);
    CHECK(r.events_accepted == 2);
}

TEST_CASE("cascades without exactly one original post are rejected whole") {
    auto r = build_cascades({event("a", "1", "r", "", 0), event("a", "2", "s", "", 1), event("b", "3", "x", "y", 3),
                             event("ok", "4", "r", "", 0)});
    REQUIRE(r.cascades.size() == 1);
    CHECK(r.cascades[0].id() == "ok");
    REQUIRE(r.rejects.size() == 2);
    CHECK(r.rejects[0].line_number == 2);
    CHECK(r.rejects[0].reason.find("multiple original posts") != std::string::npos);
    CHECK(r.rejects[1].line_number == 3);
    CHECK(r.rejects[1].reason.find("no original post") != std::string::npos);
}

TEST_CASE("dangling sources are kept with a warning") {
    auto r = build_cascades({event("c", "1", "r", "", 0), event("c", "2", "b", "ghost", 40), event("c", "3", "d", "ghost", 30)});
    REQUIRE(r.cascades.size() == 1);
    const auto& g = r.cascades[0];
    CHECK(g.node_count() == 4);
    CHECK(g.users() == std::vector<std::string>{"r", "b", "d", "ghost"});
    CHECK(g.infection_times()[3] == 30);
    REQUIRE(r.warnings.size() == 1);
    CHECK(r.warnings[0].line_number == 3);
    CHECK(r.rejects.empty());
    CHECK_FALSE(compute_depths(g).reachable(1));
}

TEST_CASE("order independence under shuffling") {
    CorpusSpec spec;
    spec.cascades = 200;
    spec.seed = 5;
    CorpusComponent c;
    c.spec.shape = Shape::branching_process;
    c.spec.branching = {1.2, 0.3, 0.2, 0.2, 0.2};
    c.law = MassLaw::log_uniform;
    c.n_min = 1;
    c.n_max = 60;
    spec.components.push_back(c);
    auto corpus = generate_corpus(spec);
    auto base = build_cascades(corpus.events);
    std::mt19937_64 rng(9);
    for (int t = 0; t < 3; ++t) {
        auto shuffled = corpus.events;
        std::shuffle(shuffled.begin(), shuffled.end(), rng);
        auto r = build_cascades(shuffled);
        CHECK(r.cascades == base.cascades);
    }
}

TEST_CASE("post conservation over a synthetic corpus") {
    CorpusSpec spec;
    spec.cascades = 2000;
    spec.seed = 1;
    CorpusComponent c;
    c.spec.shape = Shape::branching_process;
    c.spec.branching = {0.95, 0.2, 0.1, 0.1, 0.1};
    c.law = MassLaw::log_uniform;
    c.n_min = 1;
    c.n_max = 200;
    spec.components.push_back(c);
    auto corpus = generate_corpus(spec);
    auto r = build_cascades(corpus.events);
    CHECK(r.cascades.size() == spec.cascades);
    CHECK(r.rejects.empty());
    std::uint64_t posts = 0;
    for (const auto& g : r.cascades) posts += g.post_count();
    CHECK(posts == corpus.events.size());
}

TEST_CASE("event line parsing") {
    auto e = parse_event_line("c1\tp1\ta\t\t17", 1);
    REQUIRE(e);
    CHECK(e->cascade_id == "c1");
    CHECK_FALSE(e->source.has_value());
    CHECK(e->timestamp == 17);

    auto r = parse_event_line("c1\tp2\tb\ta\t18\r", 2);
    REQUIRE(r);
    CHECK(*r->source == "a");
    CHECK(format_event_line(*r) == "c1\tp2\tb\ta\t18");

    CHECK_FALSE(parse_event_line("# comment", 3));
    CHECK_FALSE(parse_event_line("", 4));

    auto message = [](std::string_view line) {
        try {
            parse_event_line(line, 42);
        } catch (const ParseError& err) {
            CHECK(err.line() == 42);
            return std::string(err.what());
        }
        return std::string();
    };
    CHECK(message("c\tp\ta\t\tx").find("line 42: bad timestamp") == 0);
    CHECK(message("c\tp\ta\t\t-3").find("negative timestamp") != std::string::npos);
    CHECK(message("c\tp\ta\t3").find("expected 5") != std::string::npos);
    CHECK(message("c\tp\ta\t\t3\textra").find("expected 5") != std::string::npos);
    CHECK(message("\tp\ta\t\t3").find("empty cascade_id") != std::string::npos);
}

TEST_CASE("read and write events round trip") {
    std::vector<RetweetEvent> events{event("c", "1", "r", "", 0), event("c", "2", "a", "r", 5)};
    std::ostringstream out;
    write_events(out, events);
    std::istringstream in("# header\n" + out.str());
    std::vector<std::pair<RetweetEvent, std::size_t>> got;
    auto n = read_events(in, [&](const RetweetEvent& e, std::size_t line) { got.emplace_back(e, line); });
    CHECK(n == 2);
    CHECK(got[0].second == 2);
    CHECK(got[1].first.source == std::optional<std::string>("r"));

    BuildResult r;
    r.rejects.push_back({3, "bad"});
    r.warnings.push_back({4, "odd"});
    std::ostringstream rep;
    write_reject_report(rep, r);
    CHECK(rep.str() == "line_number\treason\n3\tbad\n4\twarning: odd\n");
}
