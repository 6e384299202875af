#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include <omp.h>

#include <CLI11.hpp>
#include <json.hpp>

#include "cascade/builder.hpp"
#include "cascade/dist_fit.hpp"
#include "cascade/dynamics.hpp"
#include "cascade/event_io.hpp"
#include "cascade/group_stats.hpp"
#include "cascade/metrics.hpp"
#include "cascade/store.hpp"
#include "cascade/synth.hpp"
#include "cascade/util.hpp"

namespace fs = std::filesystem;
using nlohmann::ordered_json;
using namespace cascade;

namespace {

constexpr int kExitInput = 1;
constexpr int kExitNoData = 3;
constexpr int kExitLocked = 4;
constexpr int kExitInternal = 70;

struct InputError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct NoDataError : std::runtime_error {
    using std::runtime_error::runtime_error;
};
struct LockedError : std::runtime_error {
    using std::runtime_error::runtime_error;
};

std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

ordered_json file_record(const fs::path& path, const std::string& name) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    std::uint64_t h = 0xcbf29ce484222325ULL;
    std::uint64_t bytes = 0;
    char buf[1 << 16];
    while (in) {
        in.read(buf, sizeof buf);
        const auto got = in.gcount();
        h = fnv1a64(std::string_view(buf, static_cast<std::size_t>(got)), h);
        bytes += static_cast<std::uint64_t>(got);
    }
    ordered_json j;
    j["path"] = name;
    j["bytes"] = bytes;
    j["fnv1a64"] = hex64(h);
    return j;
}

struct Global {
    std::uint64_t seed = 0;
    int threads = 0;
    std::string output_dir = ".";
};

// Owns the output directory for one command: lock file, output bookkeeping,
// manifest. Anything written is removed again unless commit() is reached.
class Run {
public:
    Run(const Global& g, std::string command) : dir_(g.output_dir), command_(std::move(command)) {
        fs::create_directories(dir_);
        lock_ = dir_ / ".cascade.lock";
        std::FILE* f = std::fopen(lock_.c_str(), "wx");
        if (!f) throw LockedError("output directory " + dir_.string() + " is locked by another run (" +
                                  lock_.string() + ")");
        std::fclose(f);
        manifest_["tool"] = "cascade";
        manifest_["manifest_version"] = 1;
        manifest_["command"] = command_;
        manifest_["seed"] = g.seed;
        manifest_["threads"] = g.threads;
        manifest_["knobs"] = ordered_json::object();
        manifest_["inputs"] = ordered_json::array();
    }
    Run(const Run&) = delete;
    Run& operator=(const Run&) = delete;

    ~Run() {
        if (!committed_) {
            std::error_code ec;
            for (const auto& p : written_) fs::remove(p, ec);
        }
        std::error_code ec;
        fs::remove(lock_, ec);
    }

    ordered_json& knobs() { return manifest_["knobs"]; }
    ordered_json& manifest() { return manifest_; }

    void input(const fs::path& path) { manifest_["inputs"].push_back(file_record(path, path.string())); }

    fs::path path(const std::string& name) {
        const auto p = dir_ / name;
        written_.push_back(p);
        names_.push_back(name);
        return p;
    }

    void write(const std::string& name, const std::function<void(std::ostream&)>& body) {
        const auto p = path(name);
        std::ofstream out(p, std::ios::binary | std::ios::trunc);
        if (!out) throw std::runtime_error("cannot write " + p.string());
        body(out);
        out.flush();
        if (!out) throw std::runtime_error("failed writing " + p.string());
    }

    void commit() {
        ordered_json outputs = ordered_json::array();
        for (std::size_t i = 0; i < written_.size(); ++i) outputs.push_back(file_record(written_[i], names_[i]));
        manifest_["outputs"] = outputs;
        write("manifest.json", [&](std::ostream& o) { o << manifest_.dump(2) << '\n'; });
        committed_ = true;
    }

private:
    fs::path dir_;
    fs::path lock_;
    std::string command_;
    ordered_json manifest_;
    std::vector<fs::path> written_;
    std::vector<std::string> names_;
    bool committed_ = false;
};

std::ifstream open_input(const fs::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw InputError("cannot open " + path.string());
    return in;
}

MetricTable load_metrics(const fs::path& path) {
    auto in = open_input(path);
    try {
        auto table = read_metric_table(in);
        if (table.rows.empty()) throw NoDataError(path.string() + ": no cascades in metric table");
        return table;
    } catch (const ParseError& e) {
        throw InputError(path.string() + ": " + e.what());
    }
}

std::vector<CascadeGraph> load_store(const fs::path& path) {
    try {
        StoreReader reader(path);
        if (reader.size() == 0) throw NoDataError(path.string() + ": no cascades in store");
        return reader.load_all();
    } catch (const StoreError& e) {
        throw InputError(e.what());
    }
}

void check_metric_name(std::string_view name) {
    for (auto n : kNumericMetricNames)
        if (n == name) return;
    throw InputError("unknown metric '" + std::string(name) + "'");
}

// ---------------------------------------------------------------------------

struct BuildArgs {
    std::string events;
};

void cmd_build(const Global& g, const BuildArgs& a) {
    Run run(g, "build");
    run.input(a.events);
    auto in = open_input(a.events);
    CascadeBuilder builder;
    std::size_t events = 0;
    try {
        events = read_events(in, [&](const RetweetEvent& e, std::size_t line) { builder.add(e, line); });
    } catch (const ParseError& e) {
        throw InputError(a.events + ": " + e.what());
    }
    if (events == 0) throw NoDataError(a.events + ": no events");
    BuildResult result = builder.finish();

    write_store(run.path("cascades.store"), result.cascades);
    run.path("cascades.store.idx");
    run.write("rejects.tsv", [&](std::ostream& o) { write_reject_report(o, result); });

    std::uint64_t posts = 0;
    for (const auto& c : result.cascades) posts += c.post_count();
    auto& m = run.manifest();
    m["counts"] = {{"events_seen", result.events_seen},
                   {"events_accepted", result.events_accepted},
                   {"cascades", result.cascades.size()},
                   {"post_count", posts},
                   {"rejects", result.rejects.size()},
                   {"warnings", result.warnings.size()}};
    run.commit();
    std::cerr << "built " << result.cascades.size() << " cascades from " << events << " events ("
              << result.rejects.size() << " rejects)\n";
}

struct MetricsArgs {
    std::string store;
    std::size_t exact_threshold = 10'000;
    std::size_t sample_sources = 1'000;
    bool include_original = false;
};

void cmd_metrics(const Global& g, const MetricsArgs& a) {
    Run run(g, "metrics");
    run.input(a.store);
    run.input(store_index_path(a.store));
    run.knobs() = {{"exact_threshold", a.exact_threshold},
                   {"sample_sources", a.sample_sources},
                   {"avg_activity", a.include_original ? "include_original" : "retweets_only"}};
    const auto corpus = load_store(a.store);
    MetricOptions opt;
    opt.wiener.exact_threshold = a.exact_threshold;
    opt.wiener.sample_sources = a.sample_sources;
    opt.wiener.seed = derive_seed(g.seed, "wiener");
    opt.activity = a.include_original ? ActivityConvention::include_original : ActivityConvention::retweets_only;
    MetricTable table;
    table.rows = compute_corpus_metrics(corpus, opt);
    for (const auto& c : corpus) table.cascade_ids.push_back(c.id());
    run.write("metrics.tsv", [&](std::ostream& o) { write_metric_table(o, table); });
    run.write("venn.json", [&](std::ostream& o) { write_venn_json(o, venn_tally(table.rows)); });
    run.manifest()["counts"] = {{"cascades", table.rows.size()}};
    run.commit();
}

struct DistArgs {
    std::string metrics;
    std::string metric;
    std::size_t bins_per_decade = 10;
    std::size_t min_bins = 8;
    bool fix_c2_zero = false;
    std::vector<double> exclude;
    std::string binning = "auto";
};

void cmd_dist(const Global& g, const DistArgs& a) {
    Run run(g, "dist");
    run.input(a.metrics);
    check_metric_name(a.metric);
    run.knobs() = {{"metric", a.metric},     {"bins_per_decade", a.bins_per_decade}, {"min_occupied_bins", a.min_bins},
                   {"fix_c2_zero", a.fix_c2_zero}, {"exclude", a.exclude},            {"binning", a.binning}};
    const auto table = load_metrics(a.metrics);
    std::vector<double> values;
    std::size_t non_positive = 0, excluded = 0;
    for (const auto& row : table.rows) {
        const double v = metric_value(row, a.metric);
        if (!(v > 0)) {
            ++non_positive;
        } else if (std::find(a.exclude.begin(), a.exclude.end(), v) != a.exclude.end()) {
            ++excluded;
        } else {
            values.push_back(v);
        }
    }
    BinningMode mode = BinningMode::automatic;
    if (a.binning == "continuous") mode = BinningMode::continuous;
    if (a.binning == "integer") mode = BinningMode::integer;
    BinnedPdf pdf;
    BimodalFit fit;
    try {
        pdf = log_binned_pdf(values, a.bins_per_decade, mode);
        FitOptions fo;
        fo.fix_c2_zero = a.fix_c2_zero;
        fo.min_occupied_bins = a.min_bins;
        fit = fit_bimodal(pdf, fo);
    } catch (const FitError& e) {
        throw InputError(a.metric + ": " + e.what());
    }
    run.write("pdf.tsv", [&](std::ostream& o) { write_pdf_tsv(o, pdf); });
    run.write("fit.json", [&](std::ostream& o) { write_fit_json(o, a.metric, fit); });
    run.manifest()["counts"] = {{"rows", table.rows.size()},
                                {"fitted_samples", values.size()},
                                {"dropped_non_positive", non_positive},
                                {"dropped_excluded", excluded}};
    run.commit();
}

struct DynamicsArgs {
    std::string store;
    std::int64_t time_unit = 3600;
    std::size_t grid_size = 100;
    std::size_t k = 9;
    std::size_t n_init = 10;
    std::size_t max_iter = 300;
    std::size_t min_mass = 100;
};

void cmd_dynamics(const Global& g, const DynamicsArgs& a) {
    Run run(g, "dynamics");
    run.input(a.store);
    run.input(store_index_path(a.store));
    run.knobs() = {{"time_unit", a.time_unit}, {"grid_size", a.grid_size}, {"k", a.k},
                   {"n_init", a.n_init},       {"max_iter", a.max_iter},   {"min_mass", a.min_mass}};
    if (a.time_unit <= 0) throw InputError("--time-unit must be positive");
    const auto corpus = load_store(a.store);
    std::vector<std::string> ids;
    std::vector<std::vector<double>> series;
    std::size_t small = 0, degenerate = 0;
    for (const auto& c : corpus) {
        if (c.node_count() < a.min_mass) {
            ++small;
            continue;
        }
        const auto gs = growth_series(c, a.time_unit);
        if (gs.degenerate) {
            ++degenerate;
            continue;
        }
        ids.push_back(c.id());
        series.push_back(normalize(gs, a.grid_size, c.id()).values);
    }
    if (series.empty()) throw NoDataError("no cascades with mass >= " + std::to_string(a.min_mass) + " and nonzero lifetime");
    KMeansOptions ko;
    ko.k = a.k;
    ko.n_init = a.n_init;
    ko.max_iter = a.max_iter;
    ko.seed = derive_seed(g.seed, "kmeans");
    ClusterModel model;
    try {
        model = kmeans(series, ko);
    } catch (const DynamicsError& e) {
        throw InputError(e.what());
    }
    run.write("clusters.json", [&](std::ostream& o) { write_cluster_json(o, model); });
    run.write("assignments.tsv", [&](std::ostream& o) { write_assignments_tsv(o, ids, model); });
    run.manifest()["counts"] = {{"cascades", corpus.size()},
                                {"clustered", series.size()},
                                {"below_min_mass", small},
                                {"degenerate", degenerate}};
    run.commit();
}

struct StatsArgs {
    std::string metrics;
    std::string labels;
    std::string label_column;
    std::size_t min_group = 50;
    std::size_t kw_min_group = 5;
    std::size_t folds = 5;
};

void cmd_stats(const Global& g, const StatsArgs& a) {
    Run run(g, "stats");
    run.input(a.metrics);
    run.input(a.labels);
    run.knobs() = {{"label_column", a.label_column}, {"min_group_size", a.min_group},
                   {"kw_min_group_size", a.kw_min_group}, {"folds", a.folds}};
    const auto table = load_metrics(a.metrics);
    std::vector<std::pair<std::string, std::string>> labels;
    {
        auto in = open_input(a.labels);
        try {
            labels = read_label_file(in, a.label_column);
        } catch (const ParseError& e) {
            throw InputError(a.labels + ": " + e.what());
        }
    }
    GroupedMetricTable grouped;
    try {
        grouped = join_labels(table, labels);
    } catch (const StatsError& e) {
        throw InputError(e.what());
    }
    if (grouped.rows.empty()) throw NoDataError("no cascade in " + a.metrics + " has a label in " + a.labels);
    const std::string source = a.label_column.empty() ? fs::path(a.labels).stem().string() : a.label_column;

    std::vector<KruskalRow> kw;
    try {
        kw = kruskal_by_metric(grouped, a.kw_min_group);
    } catch (const StatsError& e) {
        throw InputError(e.what());
    }
    DistinguishOptions dopt;
    dopt.seed = derive_seed(g.seed, "distinguish");
    dopt.min_group_size = a.min_group;
    dopt.folds = a.folds;
    const auto matrix = pairwise_distinguishability(grouped, dopt);
    for (const auto& w : matrix.warnings) std::cerr << "warning: " << w << '\n';

    run.write("kw.tsv", [&](std::ostream& o) { write_kruskal_tsv(o, kw, source); });
    run.write("disting.tsv", [&](std::ostream& o) { write_distinguishability_tsv(o, matrix); });
    run.write("disting_pairs.tsv", [&](std::ostream& o) { write_distinguishability_pairs_tsv(o, matrix); });
    run.manifest()["counts"] = {{"labelled_cascades", grouped.rows.size()}, {"groups", matrix.size()}};
    run.manifest()["warnings"] = matrix.warnings;
    run.commit();
}

struct JointArgs {
    std::string metrics;
    std::string x = "mass";
    std::string y = "trend";
    std::string x_scale;
    std::string y_scale;
    std::size_t bins_per_decade = 10;
    std::size_t linear_bins = 20;
};

AxisScale scale_for(const std::string& flag, std::string_view metric) {
    if (flag.empty()) return default_axis_scale(metric);
    return flag == "linear" ? AxisScale::linear : AxisScale::log;
}

void cmd_joint(const Global& g, const JointArgs& a) {
    Run run(g, "joint");
    run.input(a.metrics);
    check_metric_name(a.x);
    check_metric_name(a.y);
    const AxisScale sx = scale_for(a.x_scale, a.x), sy = scale_for(a.y_scale, a.y);
    run.knobs() = {{"x", a.x},
                   {"y", a.y},
                   {"x_scale", sx == AxisScale::log ? "log" : "linear"},
                   {"y_scale", sy == AxisScale::log ? "log" : "linear"},
                   {"bins_per_decade", a.bins_per_decade},
                   {"linear_bins", a.linear_bins}};
    const auto table = load_metrics(a.metrics);
    std::vector<double> xs, ys;
    double max_mass = 0;
    for (const auto& r : table.rows) {
        xs.push_back(metric_value(r, a.x));
        ys.push_back(metric_value(r, a.y));
        max_mass = std::max(max_mass, static_cast<double>(r.mass));
    }
    JointHistogram h;
    try {
        h = joint_histogram(xs, ys, sx, sy, a.bins_per_decade, a.linear_bins);
    } catch (const StatsError& e) {
        throw InputError(e.what());
    }
    run.write("joint.tsv", [&](std::ostream& o) { write_joint_tsv(o, h); });
    if (a.x == "mass" && a.y == "trend")
        run.write("bounds.tsv", [&](std::ostream& o) { write_trend_bounds_tsv(o, max_mass); });
    run.manifest()["counts"] = {{"points", h.points}, {"dropped", h.dropped}};
    run.manifest()["log_correlation"] = log_correlation(xs, ys);
    run.commit();
}

struct SynthArgs {
    std::string spec;
    bool seed_from_file = false;
};

void cmd_synth(const Global& g, const SynthArgs& a) {
    Run run(g, "synth");
    run.input(a.spec);
    std::ostringstream text;
    text << open_input(a.spec).rdbuf();
    CorpusSpec spec;
    try {
        spec = parse_corpus_spec(text.str(), a.seed_from_file ? std::nullopt : std::optional<std::uint64_t>(g.seed));
    } catch (const SynthError& e) {
        throw InputError(a.spec + ": " + e.what());
    }
    run.knobs() = {{"cascades", spec.cascades}, {"corpus_seed", spec.seed}};
    if (spec.cascades == 0) throw NoDataError(a.spec + ": no events (cascades = 0)");
    Corpus corpus;
    try {
        corpus = generate_corpus(spec);
    } catch (const SynthError& e) {
        throw InputError(a.spec + ": " + e.what());
    }
    run.write("events.tsv", [&](std::ostream& o) { write_events(o, corpus.events); });
    run.write("truth.tsv", [&](std::ostream& o) { write_truth_tsv(o, corpus.truth); });
    run.manifest()["counts"] = {{"cascades", corpus.truth.size()}, {"events", corpus.events.size()}};
    run.commit();
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cascade structure analytics: build, measure, fit, cluster and compare retweet cascades."};
    app.require_subcommand(1);
    Global g;
    app.add_option("--seed", g.seed, "Master seed; every random component derives a named sub-seed from it")
        ->capture_default_str();
    app.add_option("--threads", g.threads, "OpenMP threads (0 = runtime default)")->capture_default_str();
    app.add_option("--output-dir,-o", g.output_dir, "Directory for outputs and manifest.json")->capture_default_str();

    BuildArgs build;
    auto* sc_build = app.add_subcommand("build", "Reconstruct cascades from an event TSV into a binary store");
    sc_build->add_option("events", build.events, "Event TSV")->required();

    MetricsArgs metrics;
    auto* sc_metrics = app.add_subcommand("metrics", "Structural metrics for every cascade in a store");
    sc_metrics->add_option("store", metrics.store, "cascades.store written by build")->required();
    sc_metrics->add_option("--exact-threshold", metrics.exact_threshold, "Largest cascade with exact Wiener index")
        ->capture_default_str();
    sc_metrics->add_option("--sample-sources", metrics.sample_sources, "BFS sources for sampled Wiener index")
        ->capture_default_str();
    sc_metrics->add_flag("--include-original", metrics.include_original,
                         "Count the original post in avg_activity");

    DistArgs dist;
    auto* sc_dist = app.add_subcommand("dist", "Log-binned PDF of one metric and its bimodal-law fit");
    sc_dist->add_option("metrics", dist.metrics, "metrics.tsv")->required();
    sc_dist->add_option("--metric", dist.metric, "Metric column to fit")->required();
    sc_dist->add_option("--bins-per-decade", dist.bins_per_decade)->capture_default_str();
    sc_dist->add_option("--min-bins", dist.min_bins, "Minimum occupied bins for a fit")->capture_default_str();
    sc_dist->add_flag("--fix-c2-zero", dist.fix_c2_zero, "Pure power law: drop the stretched-exponential term");
    sc_dist->add_option("--exclude", dist.exclude, "Values left out of the fit (e.g. 1 for avg_activity)");
    sc_dist->add_option("--binning", dist.binning, "auto, continuous or integer")
        ->check(CLI::IsMember({"auto", "continuous", "integer"}))
        ->capture_default_str();

    DynamicsArgs dyn;
    auto* sc_dyn = app.add_subcommand("dynamics", "Cluster normalized growth curves with K-Means");
    sc_dyn->add_option("store", dyn.store, "cascades.store written by build")->required();
    sc_dyn->add_option("--time-unit", dyn.time_unit, "Growth bucket width in seconds")->capture_default_str();
    sc_dyn->add_option("--grid-size", dyn.grid_size)->capture_default_str();
    sc_dyn->add_option("-k,--clusters", dyn.k)->capture_default_str();
    sc_dyn->add_option("--n-init", dyn.n_init)->capture_default_str();
    sc_dyn->add_option("--max-iter", dyn.max_iter)->capture_default_str();
    sc_dyn->add_option("--min-mass", dyn.min_mass, "Skip cascades with fewer users")->capture_default_str();

    StatsArgs stats;
    auto* sc_stats = app.add_subcommand("stats", "Kruskal-Wallis tests and pairwise distinguishability by group");
    sc_stats->add_option("metrics", stats.metrics, "metrics.tsv")->required();
    sc_stats->add_option("--labels", stats.labels, "TSV of cascade_id and group label")->required();
    sc_stats->add_option("--label-column", stats.label_column, "Header name of the label column");
    sc_stats->add_option("--min-group", stats.min_group, "Minimum balanced group size for the classifier")
        ->capture_default_str();
    sc_stats->add_option("--kw-min-group", stats.kw_min_group)->capture_default_str();
    sc_stats->add_option("--folds", stats.folds)->capture_default_str();

    JointArgs joint;
    auto* sc_joint = app.add_subcommand("joint", "2-D histogram of two metrics");
    sc_joint->add_option("metrics", joint.metrics, "metrics.tsv")->required();
    sc_joint->add_option("--x", joint.x)->capture_default_str();
    sc_joint->add_option("--y", joint.y)->capture_default_str();
    sc_joint->add_option("--x-scale", joint.x_scale)->check(CLI::IsMember({"log", "linear"}));
    sc_joint->add_option("--y-scale", joint.y_scale)->check(CLI::IsMember({"log", "linear"}));
    sc_joint->add_option("--bins-per-decade", joint.bins_per_decade)->capture_default_str();
    sc_joint->add_option("--linear-bins", joint.linear_bins)->capture_default_str();

    SynthArgs synth;
    auto* sc_synth = app.add_subcommand("synth", "Generate a synthetic event corpus with ground truth");
    sc_synth->add_option("spec", synth.spec, "Corpus description JSON")->required();
    sc_synth->add_flag("--seed-from-file", synth.seed_from_file, "Use the JSON's seed instead of --seed");

    for (auto* sc : app.get_subcommands({})) sc->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e);
    }
    if (g.threads > 0) omp_set_num_threads(g.threads);

    try {
        if (*sc_build) cmd_build(g, build);
        if (*sc_metrics) cmd_metrics(g, metrics);
        if (*sc_dist) cmd_dist(g, dist);
        if (*sc_dyn) cmd_dynamics(g, dyn);
        if (*sc_stats) cmd_stats(g, stats);
        if (*sc_joint) cmd_joint(g, joint);
        if (*sc_synth) cmd_synth(g, synth);
    } catch (const NoDataError& e) {
        std::cerr << "cascade: " << e.what() << '\n';
        return kExitNoData;
    } catch (const LockedError& e) {
        std::cerr << "cascade: " << e.what() << '\n';
        return kExitLocked;
    } catch (const InputError& e) {
        std::cerr << "cascade: error: " << e.what() << '\n';
        return kExitInput;
    } catch (const std::exception& e) {
        std::cerr << "cascade: internal error: " << e.what() << '\n';
        return kExitInternal;
    }
    return 0;
}
