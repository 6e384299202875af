#include "cascade/synth.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <ostream>

#include <boost/math/special_functions/gamma.hpp>
#include <json.hpp>

#include "cascade/util.hpp"

namespace cascade {

namespace {

constexpr std::string_view kShapeNames[] = {"star", "chain", "star_with_chain", "double_star", "branching_process"};

void check_rate(double v, const char* name) {
    if (!(v >= 0.0 && v <= 1.0)) throw SynthError(std::string(name) + " must lie in [0, 1]");
}

std::string user(std::size_t i) { return "u" + std::to_string(i); }

Timestamp waiting_time(double scale, std::mt19937_64& rng) {
    if (scale <= 0) return 1;
    std::exponential_distribution<double> wait(1.0 / scale);
    return 1 + static_cast<Timestamp>(std::floor(wait(rng)));
}

}  // namespace

std::string_view shape_name(Shape shape) { return kShapeNames[static_cast<int>(shape)]; }

Shape parse_shape(std::string_view name) {
    for (int i = 0; i < 5; ++i)
        if (kShapeNames[i] == name) return static_cast<Shape>(i);
    throw SynthError("unknown shape '" + std::string(name) + "'");
}

GroundTruth closed_form_truth(Shape shape, std::size_t n, std::size_t k) {
    GroundTruth t;
    t.shape = shape;
    t.mass = n;
    const auto N = static_cast<double>(n);
    if (n < 2) return t;
    switch (shape) {
        case Shape::star:
            t.trend = 2.0 - 2.0 / N;
            t.fluctuation = std::sqrt(2.0) * (1.0 - 2.0 / N);
            t.branch = std::sqrt(N);
            break;
        case Shape::chain:
            t.trend = (N + 1.0) / 3.0;
            t.fluctuation = 0.0;
            // out-degrees 1,...,1,0
            t.branch = std::sqrt(N) / (N - 1.0);
            break;
        case Shape::star_with_chain: {
            const auto K = static_cast<double>(k);
            const double m = N - K - 1.0;  // root's children
            t.fluctuation = std::sqrt(2.0 + K) * (1.0 - (2.0 + K) / N);
            // Wiener index of a tree: sum over edges of (size one side) * (size other side)
            double w = (m - 1.0) * (N - 1.0) + (K + 1.0) * (N - K - 1.0);
            for (std::size_t s = 1; s <= k; ++s) w += static_cast<double>(s) * (N - static_cast<double>(s));
            t.trend = 2.0 * w / (N * (N - 1.0));
            // out-degrees: one m, K ones, the rest zero
            const double mean = (N - 1.0) / N;
            const double var = (m * m + K - N * mean * mean) / (N - 1.0);
            t.branch = std::sqrt(var) / mean;
            break;
        }
        case Shape::double_star:
            t.branch = std::sqrt(N / 2.0);
            t.branch_approximate = true;
            break;
        case Shape::branching_process:
            break;
    }
    return t;
}

GeneratedCascade generate(const GeneratorSpec& spec, const std::string& cascade_id) {
    const std::size_t n = spec.n;
    if (n < 1) throw SynthError("N must be at least 1");
    const auto& bp = spec.branching;
    check_rate(bp.p_rep, "p_rep");
    check_rate(bp.p_conv, "p_conv");
    check_rate(bp.p_rec, "p_rec");
    check_rate(bp.p_loop, "p_loop");
    if (!(bp.offspring_mean >= 0)) throw SynthError("offspring mean must be non-negative");
    if (!(spec.time_scale >= 0)) throw SynthError("time scale must be non-negative");
    if (spec.shape == Shape::star_with_chain && spec.k + 1 >= n)
        throw SynthError("star_with_chain needs K < N - 1 (K = " + std::to_string(spec.k) +
                         ", N = " + std::to_string(n) + ")");
    if (spec.shape == Shape::double_star && (n < 4 || n % 2 != 0))
        throw SynthError("double_star needs an even N >= 4");

    std::mt19937_64 rng(spec.seed);
    std::vector<std::size_t> parent(1, 0);
    switch (spec.shape) {
        case Shape::star:
            for (std::size_t v = 1; v < n; ++v) parent.push_back(0);
            break;
        case Shape::chain:
            for (std::size_t v = 1; v < n; ++v) parent.push_back(v - 1);
            break;
        case Shape::star_with_chain: {
            const std::size_t children = n - spec.k - 1;
            for (std::size_t v = 1; v <= children; ++v) parent.push_back(0);
            for (std::size_t j = 0; j < spec.k; ++j) parent.push_back(j == 0 ? 1 : parent.size() - 1);
            break;
        }
        case Shape::double_star: {
            for (std::size_t v = 1; v < n / 2; ++v) parent.push_back(0);
            for (std::size_t j = 0; j < n / 2; ++j) parent.push_back(1);
            break;
        }
        case Shape::branching_process: {
            std::poisson_distribution<std::uint64_t> offspring(bp.offspring_mean);
            for (std::size_t u = 0; u < parent.size() && parent.size() < n; ++u) {
                const std::uint64_t kids = bp.offspring_mean > 0 ? offspring(rng) : 0;
                for (std::uint64_t c = 0; c < kids && parent.size() < n; ++c) parent.push_back(u);
            }
            break;
        }
    }
    const std::size_t mass = parent.size();

    std::vector<Timestamp> t(mass, 0);
    for (std::size_t v = 1; v < mass; ++v) t[v] = t[parent[v]] + waiting_time(spec.time_scale, rng);

    GeneratedCascade out;
    auto emit = [&](std::size_t actor, std::optional<std::size_t> source, Timestamp ts) {
        RetweetEvent e;
        e.cascade_id = cascade_id;
        e.post_id = cascade_id + ":" + std::to_string(out.events.size());
        e.actor = user(actor);
        if (source) e.source = user(*source);
        e.timestamp = ts;
        out.events.push_back(std::move(e));
    };
    emit(0, std::nullopt, 0);
    for (std::size_t v = 1; v < mass; ++v) emit(v, parent[v], t[v]);

    MutationCounts mut;
    if (spec.shape == Shape::branching_process) {
        std::bernoulli_distribution rep(bp.p_rep), conv(bp.p_conv), rec(bp.p_rec), loop(bp.p_loop);
        for (std::size_t v = 1; v < mass; ++v) {
            const std::size_t p = parent[v];
            if (rep(rng)) {
                emit(v, p, t[v] + waiting_time(spec.time_scale, rng));
                ++mut.repeats;
            }
            if (conv(rng) && v >= 2) {
                // any earlier user other than the parent; earlier indices are never descendants
                std::uniform_int_distribution<std::size_t> pick(0, v - 2);
                std::size_t w = pick(rng);
                if (w >= p) ++w;
                emit(v, w, std::max(t[v], t[w]) + waiting_time(spec.time_scale, rng));
                ++mut.converges;
            }
            if (rec(rng)) {
                emit(p, v, t[v] + waiting_time(spec.time_scale, rng));
                ++mut.reciprocals;
            }
            if (loop(rng)) {
                emit(v, v, t[v] + waiting_time(spec.time_scale, rng));
                ++mut.loops;
            }
        }
    }
    std::stable_sort(out.events.begin() + 1, out.events.end(),
                     [](const RetweetEvent& a, const RetweetEvent& b) { return a.timestamp < b.timestamp; });
    for (std::size_t i = 0; i < out.events.size(); ++i) out.events[i].post_id = cascade_id + ":" + std::to_string(i);

    out.truth = closed_form_truth(spec.shape, mass, spec.k);
    out.truth.cascade_id = cascade_id;
    out.truth.label = spec.label.empty() ? std::string(shape_name(spec.shape)) : spec.label;
    out.truth.mutations = mut;
    return out;
}

BimodalWeights bimodal_component_weights(const BimodalParams& p) {
    BimodalWeights w;
    if (p.c1 > 0) {
        if (p.alpha <= 1) throw SynthError("power-law component needs alpha > 1 to be normalizable");
        w.power = p.c1 * std::pow(1.0 + p.x0, 1.0 - p.alpha) / (p.alpha - 1.0);
    }
    if (p.c2 > 0) {
        if (p.lambda <= 0 || p.beta <= 0) throw SynthError("stretched component needs lambda, beta > 0");
        const double a = 1.0 / p.beta;
        w.stretched = p.c2 * boost::math::tgamma(a, p.lambda) / (p.beta * std::pow(p.lambda, a));
    }
    if (!(w.power + w.stretched > 0)) throw SynthError("bimodal law has no mass on [1, inf)");
    return w;
}

double sample_power_law(double alpha, double x0, std::mt19937_64& rng) {
    if (alpha <= 1) throw SynthError("power-law sampling needs alpha > 1");
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    const double u = unit(rng);
    return (1.0 + x0) * std::pow(1.0 - u, -1.0 / (alpha - 1.0)) - x0;
}

double sample_bimodal(const BimodalParams& p, std::mt19937_64& rng) {
    const auto w = bimodal_component_weights(p);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    if (unit(rng) * (w.power + w.stretched) < w.power) return sample_power_law(p.alpha, p.x0, rng);
    // u = lambda x^beta is Gamma(1/beta) distributed, truncated to u >= lambda
    std::gamma_distribution<double> gamma(1.0 / p.beta, 1.0);
    double u = gamma(rng);
    while (u < p.lambda) u = gamma(rng);
    return std::pow(u / p.lambda, 1.0 / p.beta);
}

namespace {

std::size_t draw_mass(const CorpusComponent& c, std::mt19937_64& rng) {
    switch (c.law) {
        case MassLaw::fixed:
            return c.spec.n;
        case MassLaw::log_uniform: {
            std::uniform_real_distribution<double> u(std::log(static_cast<double>(c.n_min)),
                                                     std::log(static_cast<double>(c.n_max) + 1.0));
            const auto n = static_cast<std::size_t>(std::floor(std::exp(u(rng))));
            return std::clamp(n, c.n_min, c.n_max);
        }
        case MassLaw::bimodal:
            for (;;) {
                const double x = std::floor(sample_bimodal(c.mass_params, rng));
                if (x >= static_cast<double>(c.n_min) && x <= static_cast<double>(c.n_max))
                    return static_cast<std::size_t>(x);
            }
    }
    return c.spec.n;
}

std::size_t fit_to_shape(const GeneratorSpec& s, std::size_t n) {
    if (s.shape == Shape::star_with_chain) return std::max(n, s.k + 2);
    if (s.shape == Shape::double_star) return std::max<std::size_t>(4, n + n % 2);
    return std::max<std::size_t>(n, 1);
}

}  // namespace

Corpus generate_corpus(const CorpusSpec& spec) {
    if (spec.components.empty()) throw SynthError("corpus needs at least one component");
    std::vector<double> weights;
    for (const auto& c : spec.components) {
        if (!(c.weight >= 0)) throw SynthError("component weights must be non-negative");
        if (c.law != MassLaw::fixed && (c.n_min < 1 || c.n_min > c.n_max))
            throw SynthError("mass range needs 1 <= min <= max");
        weights.push_back(c.weight);
    }
    if (std::accumulate(weights.begin(), weights.end(), 0.0) <= 0) throw SynthError("all component weights are zero");

    const std::size_t width = std::to_string(spec.cascades == 0 ? 0 : spec.cascades - 1).size();
    std::vector<GeneratedCascade> made(spec.cascades);
    const auto count = static_cast<std::int64_t>(spec.cascades);
    std::exception_ptr failure;
#pragma omp parallel for schedule(dynamic, 256)
    for (std::int64_t i = 0; i < count; ++i) {
        try {
            std::mt19937_64 rng(derive_seed(spec.seed, static_cast<std::uint64_t>(i)));
            std::discrete_distribution<std::size_t> pick(weights.begin(), weights.end());
            const auto& comp = spec.components[pick(rng)];
            GeneratorSpec g = comp.spec;
            g.n = fit_to_shape(g, draw_mass(comp, rng));
            g.seed = rng();
            std::string id = std::to_string(i);
            id = "c" + std::string(width - id.size(), '0') + id;
            made[i] = generate(g, id);
        } catch (...) {
#pragma omp critical(synth_failure)
            if (!failure) failure = std::current_exception();
        }
    }
    if (failure) std::rethrow_exception(failure);

    Corpus corpus;
    std::size_t total = 0;
    for (const auto& m : made) total += m.events.size();
    corpus.events.reserve(total);
    corpus.truth.reserve(made.size());
    for (auto& m : made) {
        std::move(m.events.begin(), m.events.end(), std::back_inserter(corpus.events));
        corpus.truth.push_back(std::move(m.truth));
    }
    return corpus;
}

CorpusSpec parse_corpus_spec(std::string_view json_text, std::optional<std::uint64_t> seed_override) {
    using nlohmann::json;
    json j;
    try {
        j = json::parse(json_text);
    } catch (const json::parse_error& e) {
        throw SynthError(std::string("corpus spec is not valid JSON: ") + e.what());
    }
    try {
        CorpusSpec s;
        s.cascades = j.at("cascades").get<std::size_t>();
        s.seed = seed_override ? *seed_override : j.value("seed", std::uint64_t{0});
        for (const auto& c : j.at("components")) {
            CorpusComponent comp;
            comp.spec.shape = parse_shape(c.at("shape").get<std::string>());
            comp.weight = c.value("weight", 1.0);
            comp.spec.k = c.value("k", std::size_t{0});
            comp.spec.label = c.value("label", std::string());
            comp.spec.time_scale = c.value("time_scale", 60.0);
            if (c.contains("branching")) {
                const auto& b = c["branching"];
                auto& bp = comp.spec.branching;
                bp.offspring_mean = b.value("offspring_mean", bp.offspring_mean);
                bp.p_rep = b.value("p_rep", 0.0);
                bp.p_conv = b.value("p_conv", 0.0);
                bp.p_rec = b.value("p_rec", 0.0);
                bp.p_loop = b.value("p_loop", 0.0);
            }
            const auto& n = c.at("n");
            if (n.is_number()) {
                comp.law = MassLaw::fixed;
                comp.spec.n = n.get<std::size_t>();
            } else if (n.value("law", std::string("log_uniform")) == "bimodal") {
                comp.law = MassLaw::bimodal;
                comp.n_min = n.value("min", std::size_t{1});
                comp.n_max = static_cast<std::size_t>(n.value("max", 1e6));
                const json params = n.value("params", json::object());
                auto& p = comp.mass_params;
                // defaults: fitted Mass law
                p.c1 = params.value("c1", 2.10);
                p.x0 = params.value("x0", 2.29e-6);
                p.alpha = params.value("alpha", 1.99);
                p.c2 = params.value("c2", 1.46e-3);
                p.lambda = params.value("lambda", 0.06);
                p.beta = params.value("beta", 0.63);
            } else {
                comp.law = MassLaw::log_uniform;
                comp.n_min = n.at("min").get<std::size_t>();
                comp.n_max = n.at("max").get<std::size_t>();
            }
            s.components.push_back(std::move(comp));
        }
        return s;
    } catch (const json::exception& e) {
        throw SynthError(std::string("bad corpus spec: ") + e.what());
    }
}

void write_truth_tsv(std::ostream& out, const std::vector<GroundTruth>& truth) {
    auto cell = [](const std::optional<double>& v) { return v ? format_double(*v) : std::string("NA"); };
    out << "cascade_id\tshape\tclosed_form_trend\tclosed_form_fluct\tclosed_form_branch\tlabel\n";
    for (const auto& t : truth)
        out << t.cascade_id << '\t' << shape_name(t.shape) << '\t' << cell(t.trend) << '\t' << cell(t.fluctuation)
            << '\t' << cell(t.branch) << '\t' << t.label << '\n';
}

GrowthSeries synth_growth_series(GrowthFamily family, std::size_t buckets, std::mt19937_64& rng) {
    if (buckets < 2) throw SynthError("need at least two buckets");
    const auto B = static_cast<double>(buckets);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    std::vector<double> rate(buckets, 0.0);
    const double amplitude = 20.0 * (0.8 + 0.4 * unit(rng));
    switch (family) {
        case GrowthFamily::early_spike: {
            const double peak = (0.02 + 0.08 * unit(rng)) * B;
            const double width = (0.03 + 0.05 * unit(rng)) * B;
            for (std::size_t b = 0; b < buckets; ++b) rate[b] = amplitude * std::exp(-std::abs(b - peak) / width);
            break;
        }
        case GrowthFamily::late_spike: {
            const double peak = (0.75 + 0.15 * unit(rng)) * B;
            const double width = (0.03 + 0.05 * unit(rng)) * B;
            for (std::size_t b = 0; b < buckets; ++b) rate[b] = amplitude * std::exp(-std::abs(b - peak) / width);
            break;
        }
        case GrowthFamily::flat_persist:
            for (std::size_t b = 0; b < buckets; ++b) rate[b] = 0.4 * amplitude * (0.8 + 0.4 * unit(rng));
            break;
    }
    GrowthSeries s;
    s.time_unit = 1;
    s.lifetime = static_cast<Timestamp>(buckets) - 1;
    s.counts.resize(buckets);
    for (std::size_t b = 0; b < buckets; ++b) {
        std::poisson_distribution<std::uint64_t> draw(rate[b] + 0.1);
        s.counts[b] = draw(rng);
    }
    s.counts.front() += 1;  // the original poster
    return s;
}

}  // namespace cascade
