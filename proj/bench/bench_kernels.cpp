#include <benchmark/benchmark.h>

#include <random>

#include "cascade/builder.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/group_stats.hpp"
#include "cascade/metrics.hpp"
#include "cascade/synth.hpp"

using namespace cascade;

namespace {

CascadeGraph big_tree(std::size_t n) {
    GeneratorSpec s;
    s.shape = Shape::branching_process;
    s.n = n;
    s.branching.offspring_mean = 3.0;
    s.seed = 1;
    return build_cascades(generate(s, "big").events).cascades.at(0);
}

const std::vector<CascadeGraph>& corpus() {
    static const std::vector<CascadeGraph> cascades = [] {
        CorpusSpec spec;
        spec.cascades = 20000;
        spec.seed = 2;
        CorpusComponent c;
        c.spec.shape = Shape::branching_process;
        c.spec.branching = {2.0, 0.2, 0.1, 0.1, 0.1};
        c.law = MassLaw::log_uniform;
        c.n_min = 1;
        c.n_max = 500;
        spec.components.push_back(c);
        return build_cascades(generate_corpus(spec).events).cascades;
    }();
    return cascades;
}

const std::vector<std::vector<double>>& curves() {
    static const std::vector<std::vector<double>> points = [] {
        std::mt19937_64 rng(3);
        std::vector<std::vector<double>> p;
        for (int f = 0; f < 3; ++f)
            for (int i = 0; i < 1000; ++i)
                p.push_back(normalize(synth_growth_series(static_cast<GrowthFamily>(f), 80, rng)).values);
        return p;
    }();
    return points;
}

const GroupedMetricTable& grouped() {
    static const GroupedMetricTable table = [] {
        CorpusSpec spec;
        spec.cascades = 2400;
        spec.seed = 4;
        for (Shape s : {Shape::star, Shape::chain, Shape::star_with_chain, Shape::branching_process}) {
            CorpusComponent c;
            c.spec.shape = s;
            c.spec.k = 2;
            c.spec.branching.offspring_mean = 1.5;
            c.law = MassLaw::log_uniform;
            c.n_min = 4;
            c.n_max = 200;
            spec.components.push_back(c);
        }
        auto gen = generate_corpus(spec);
        auto built = build_cascades(gen.events);
        GroupedMetricTable t;
        t.rows = compute_corpus_metrics(built.cascades);
        for (std::size_t i = 0; i < built.cascades.size(); ++i) {
            t.cascade_ids.push_back(built.cascades[i].id());
            t.labels.push_back(gen.truth[i].label);
        }
        return t;
    }();
    return table;
}

void BM_Wiener(benchmark::State& state) {
    const auto g = big_tree(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(wiener_trend(g).value);
}
void BM_WienerRef(benchmark::State& state) {
    const auto g = big_tree(static_cast<std::size_t>(state.range(0)));
    for (auto _ : state) benchmark::DoNotOptimize(ref::wiener_trend(g).value);
}

void BM_CorpusMetrics(benchmark::State& state) {
    corpus();
    for (auto _ : state) benchmark::DoNotOptimize(compute_corpus_metrics(corpus()).size());
}
void BM_CorpusMetricsRef(benchmark::State& state) {
    corpus();
    for (auto _ : state) benchmark::DoNotOptimize(ref::compute_corpus_metrics(corpus()).size());
}

void BM_KMeans(benchmark::State& state) {
    curves();
    KMeansOptions opt;
    opt.k = 9;
    for (auto _ : state) benchmark::DoNotOptimize(kmeans(curves(), opt).inertia);
}
void BM_KMeansRef(benchmark::State& state) {
    curves();
    KMeansOptions opt;
    opt.k = 9;
    for (auto _ : state) benchmark::DoNotOptimize(ref::kmeans(curves(), opt).inertia);
}

void BM_Distinguish(benchmark::State& state) {
    grouped();
    for (auto _ : state) benchmark::DoNotOptimize(pairwise_distinguishability(grouped()).accuracy.size());
}
void BM_DistinguishRef(benchmark::State& state) {
    grouped();
    for (auto _ : state) benchmark::DoNotOptimize(ref::pairwise_distinguishability(grouped()).accuracy.size());
}

}  // namespace

BENCHMARK(BM_Wiener)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_WienerRef)->Arg(2000)->Arg(8000)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorpusMetrics)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_CorpusMetricsRef)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeans)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_KMeansRef)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_Distinguish)->Unit(benchmark::kMillisecond);
BENCHMARK(BM_DistinguishRef)->Unit(benchmark::kMillisecond);

BENCHMARK_MAIN();
