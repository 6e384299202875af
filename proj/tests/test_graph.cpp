#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>

#include "cascade/graph.hpp"
#include "support.hpp"

using namespace cascade;

TEST_CASE("constructor validates edges and counts retweets") {
    auto g = oracle::make_graph(3, {{0, 1}, {0, 1}, {1, 2}});
    CHECK(g.node_count() == 3);
    CHECK(g.edge_count() == 2);
    CHECK(g.retweet_count() == 3);
    CHECK(g.post_count() == 4);

    CHECK_THROWS(CascadeGraph("x", {"a"}, {0}, {Edge{0, 1, 1}}));
    CHECK_THROWS(CascadeGraph("x", {"a", "b"}, {0, 1}, {Edge{0, 1, 0}}));
    CHECK_THROWS(CascadeGraph("x", {"a", "b"}, {0, 1}, {Edge{0, 1, 1}, Edge{0, 1, 2}}));
    CHECK_THROWS(CascadeGraph("x", {}, {}, {}));
    CHECK_THROWS(CascadeGraph("x", {"a", "b"}, {0}, {}));
}

TEST_CASE("undirected view drops loops and duplicates") {
    auto g = oracle::make_graph(3, {{0, 1}, {1, 0}, {1, 1}, {1, 2}});
    auto nb = g.undirected_neighbors(1);
    CHECK(std::vector<NodeId>(nb.begin(), nb.end()) == std::vector<NodeId>{0, 2});
    auto out = g.out_neighbors(1);
    CHECK(std::vector<NodeId>(out.begin(), out.end()) == std::vector<NodeId>{0, 1, 2});
}

TEST_CASE("depths of star and chain") {
    std::vector<NodeId> star(10, 0);
    auto s = compute_depths(oracle::tree_from_parents(star));
    CHECK(s.length == 1);
    CHECK(s.depth[0] == 0);
    for (std::size_t v = 1; v < 10; ++v) CHECK(s.depth[v] == 1);

    std::vector<NodeId> chain{0, 0, 1, 2, 3};
    auto c = compute_depths(oracle::tree_from_parents(chain));
    CHECK(c.length == 4);
    for (std::uint32_t v = 0; v < 5; ++v) CHECK(c.depth[v] == v);
}

TEST_CASE("converge edge from a deep node does not deepen a leaf") {
    // root 0 -> 1 (leaf x), root -> 2 -> 3 -> 4 (y at depth 3), y -> x
    auto g = oracle::make_graph(5, {{0, 1}, {0, 2}, {2, 3}, {3, 4}, {4, 1}});
    auto d = compute_depths(g);
    CHECK(d.depth[1] == 1);
    CHECK(d.depth[4] == 3);
}

TEST_CASE("self-loops are ignored and unreachable nodes are marked") {
    // 3 only points into the tree, nothing reaches it
    auto g = oracle::make_graph(4, {{0, 0}, {0, 1}, {1, 1}, {1, 2}, {3, 2}});
    auto d = compute_depths(g);
    CHECK(d.depth[2] == 2);
    CHECK(d.length == 2);
    CHECK_FALSE(d.reachable(3));
}

TEST_CASE("depth minimality against exhaustive path enumeration") {
    std::mt19937_64 rng(11);
    for (int trial = 0; trial < 300; ++trial) {
        std::uniform_int_distribution<std::size_t> size(1, 10);
        const std::size_t n = size(rng);
        std::uniform_int_distribution<NodeId> node(0, static_cast<NodeId>(n - 1));
        std::uniform_int_distribution<int> m(0, 25);
        std::vector<std::pair<NodeId, NodeId>> pairs;
        const int edges = m(rng);
        for (int i = 0; i < edges; ++i) pairs.emplace_back(node(rng), node(rng));
        auto g = oracle::make_graph(n, pairs);
        auto d = compute_depths(g);
        auto expected = oracle::enumerate_depths(g);
        CHECK(d.depth == expected);
        std::uint32_t length = 0;
        for (auto x : expected)
            if (x != kUnreachable) length = std::max(length, x);
        CHECK(d.length == length);
    }
}

TEST_CASE("growth series bucketing") {
    CascadeGraph g("c", {"r", "a", "b", "c"}, {0, 10, 70, 130}, {Edge{0, 1, 1}, Edge{0, 2, 1}, Edge{0, 3, 1}});
    auto s = growth_series(g, 60);
    CHECK(s.counts == std::vector<std::uint64_t>{2, 1, 1});
    CHECK(s.lifetime == 130);
    CHECK_FALSE(s.degenerate);

    CascadeGraph single("s", {"r"}, {5}, {});
    auto one = growth_series(single, 60);
    CHECK(one.counts == std::vector<std::uint64_t>{1});
    CHECK(one.lifetime == 0);
    CHECK(one.degenerate);

    CHECK_THROWS(growth_series(g, 0));
}

TEST_CASE("growth series is relative to the root post and conserves nodes") {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 50; ++trial) {
        const std::size_t n = 2 + trial;
        std::vector<std::string> users;
        std::vector<Timestamp> times;
        std::vector<Edge> edges;
        std::uniform_int_distribution<Timestamp> t(1000, 100000);
        for (std::size_t i = 0; i < n; ++i) {
            users.push_back("u" + std::to_string(1000 + i));
            times.push_back(i == 0 ? 1000 : t(rng));
            if (i > 0) edges.push_back({0, static_cast<NodeId>(i), 1});
        }
        CascadeGraph g("c", users, times, edges);
        auto s = growth_series(g, 97);
        CHECK(std::accumulate(s.counts.begin(), s.counts.end(), std::uint64_t{0}) == n);
        CHECK(s.lifetime == *std::max_element(times.begin(), times.end()) - 1000);
        CHECK(s.counts.size() == static_cast<std::size_t>(s.lifetime / 97) + 1);
    }
}
