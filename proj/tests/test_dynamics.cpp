#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <numeric>
#include <random>
#include <sstream>

#include "cascade/dynamics.hpp"
#include "cascade/synth.hpp"
#include "support.hpp"

using namespace cascade;
using doctest::Approx;

namespace {

GrowthSeries series(std::vector<std::uint64_t> counts, Timestamp unit = 1) {
    GrowthSeries s;
    s.counts = std::move(counts);
    s.time_unit = unit;
    s.lifetime = static_cast<Timestamp>(s.counts.size()) * unit - 1;
    return s;
}

struct Families {
    std::vector<std::vector<double>> points;
    std::vector<std::uint32_t> labels;
};

Families families(std::size_t per_family, std::uint64_t seed) {
    Families f;
    std::mt19937_64 rng(seed);
    for (std::uint32_t fam = 0; fam < 3; ++fam) {
        for (std::size_t i = 0; i < per_family; ++i) {
            std::uniform_int_distribution<std::size_t> len(30, 120);
            auto s = synth_growth_series(static_cast<GrowthFamily>(fam), len(rng), rng);
            f.points.push_back(normalize(s).values);
            f.labels.push_back(fam);
        }
    }
    return f;
}

}  // namespace

TEST_CASE("rebinning preserves the total") {
    std::mt19937_64 rng(1);
    for (int t = 0; t < 100; ++t) {
        std::uniform_int_distribution<std::size_t> len(1, 400);
        std::uniform_int_distribution<std::uint64_t> c(0, 50);
        std::vector<std::uint64_t> counts(len(rng));
        for (auto& x : counts) x = c(rng);
        const auto grid = rebin_relative_time(series(counts), 100);
        CHECK(grid.size() == 100);
        const double total = std::accumulate(grid.begin(), grid.end(), 0.0);
        CHECK(total == Approx(static_cast<double>(std::accumulate(counts.begin(), counts.end(), 0ULL))).epsilon(1e-12));
    }
}

TEST_CASE("rebinning small cases by hand") {
    // 4 buckets onto 2 cells: pairs add
    CHECK(rebin_relative_time(series({1, 2, 3, 4}), 2) == std::vector<double>{3, 7});
    // 1 bucket onto 4 cells: spread evenly
    CHECK(rebin_relative_time(series({8}), 4) == std::vector<double>{2, 2, 2, 2});
    // 2 buckets onto 3 cells
    auto g = rebin_relative_time(series({3, 6}), 3);
    CHECK(g[0] == Approx(2.0));
    CHECK(g[1] == Approx(1.0 + 2.0));
    CHECK(g[2] == Approx(4.0));
    CHECK_THROWS_AS(rebin_relative_time(series({}), 3), DynamicsError);
    CHECK_THROWS_AS(rebin_relative_time(series({1}), 0), DynamicsError);
}

TEST_CASE("normalization is max scaled and rejects degenerate series") {
    auto n = normalize(series({1, 5, 2, 0}), 8, "c9");
    CHECK(n.cascade_id == "c9");
    CHECK(*std::max_element(n.values.begin(), n.values.end()) == 1.0);
    CHECK(*std::min_element(n.values.begin(), n.values.end()) == 0.0);

    GrowthSeries single;
    single.counts = {1};
    single.degenerate = true;
    CHECK_THROWS_AS(normalize(single), DynamicsError);
    CHECK_THROWS_AS(max_scale(std::vector<double>{0, 0}), DynamicsError);
}

TEST_CASE("the same shape at different time scales normalizes identically") {
    auto a = normalize(series({4, 2, 1, 1}), 100);
    auto b = normalize(series({4, 4, 2, 2, 1, 1, 1, 1}), 100);
    for (std::size_t i = 0; i < 100; ++i) CHECK(a.values[i] == Approx(b.values[i]).epsilon(1e-12));
}

TEST_CASE("ARI agrees with pair counting") {
    std::mt19937_64 rng(2);
    for (int t = 0; t < 30; ++t) {
        std::uniform_int_distribution<std::uint32_t> la(0, 3), lb(0, 4);
        std::vector<std::uint32_t> a(150), b(150);
        for (auto& x : a) x = la(rng);
        for (std::size_t i = 0; i < b.size(); ++i) b[i] = t % 3 == 0 ? a[i] : lb(rng);
        CHECK(adjusted_rand_index(a, b) == Approx(oracle::pair_count_ari(a, b)).epsilon(1e-10));
    }
    std::vector<std::uint32_t> x{0, 0, 1, 1}, y{5, 5, 2, 2};
    CHECK(adjusted_rand_index(x, y) == 1.0);
}

TEST_CASE("k-means recovers three growth families") {
    auto f = families(300, 3);
    KMeansOptions opt;
    opt.k = 3;
    opt.seed = 42;
    auto m = kmeans(f.points, opt);
    CHECK(adjusted_rand_index(m.assignments, f.labels) >= 0.9);
    for (std::size_t i = 1; i < m.inertia_trace.size(); ++i) CHECK(m.inertia_trace[i] <= m.inertia_trace[i - 1]);
    CHECK(std::accumulate(m.sizes.begin(), m.sizes.end(), std::size_t{0}) == f.points.size());
    CHECK(m.centroids.size() == 3);
    CHECK(m.centroids[0].size() == 100);
}

TEST_CASE("parallel and serial k-means agree exactly and are seed deterministic") {
    auto f = families(100, 4);
    KMeansOptions opt;
    opt.k = 5;
    opt.seed = 9;
    auto a = kmeans(f.points, opt);
    auto b = ref::kmeans(f.points, opt);
    CHECK(a.assignments == b.assignments);
    CHECK(a.centroids == b.centroids);
    CHECK(a.inertia == b.inertia);
    auto c = kmeans(f.points, opt);
    CHECK(c.assignments == a.assignments);
}

TEST_CASE("k-means inertia equals the sum of squared distances to assigned centroids") {
    auto f = families(50, 5);
    KMeansOptions opt;
    opt.k = 4;
    auto m = kmeans(f.points, opt);
    double s = 0;
    for (std::size_t i = 0; i < f.points.size(); ++i)
        for (std::size_t d = 0; d < f.points[i].size(); ++d) {
            const double diff = f.points[i][d] - m.centroids[m.assignments[i]][d];
            s += diff * diff;
        }
    CHECK(m.inertia == Approx(s).epsilon(1e-12));
}

TEST_CASE("k-means with duplicate points keeps every cluster non-empty") {
    std::vector<std::vector<double>> pts(20, std::vector<double>{1.0, 2.0});
    pts.push_back({5.0, 5.0});
    pts.push_back({9.0, 1.0});
    KMeansOptions opt;
    opt.k = 3;
    auto m = kmeans(pts, opt);
    for (auto s : m.sizes) CHECK(s > 0);
    CHECK(m.inertia == Approx(0.0));
}

TEST_CASE("k-means argument checks") {
    std::vector<std::vector<double>> pts{{0.0}, {1.0}};
    KMeansOptions opt;
    opt.k = 3;
    CHECK_THROWS_AS(kmeans(pts, opt), DynamicsError);
    opt.k = 0;
    CHECK_THROWS_AS(kmeans(pts, opt), DynamicsError);
    std::vector<std::vector<double>> ragged{{0.0}, {1.0, 2.0}};
    opt.k = 1;
    CHECK_THROWS_AS(kmeans(ragged, opt), DynamicsError);
}

TEST_CASE("cluster outputs") {
    auto f = families(10, 6);
    KMeansOptions opt;
    opt.k = 3;
    auto m = kmeans(f.points, opt);
    std::ostringstream j;
    write_cluster_json(j, m);
    for (const char* key : {"\"k\"", "\"seed\"", "\"inertia\"", "\"centroids\"", "\"sizes\""})
        CHECK(j.str().find(key) != std::string::npos);
    std::vector<std::string> ids;
    for (std::size_t i = 0; i < f.points.size(); ++i) ids.push_back("c" + std::to_string(i));
    std::ostringstream t;
    write_assignments_tsv(t, ids, m);
    CHECK(t.str().rfind("cascade_id\tcluster\nc0\t", 0) == 0);
}
