#pragma once

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <random>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

#include "cascade/dist_fit.hpp"
#include "cascade/graph.hpp"

namespace cascade {

class SynthError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

enum class Shape { star, chain, star_with_chain, double_star, branching_process };

std::string_view shape_name(Shape shape);
Shape parse_shape(std::string_view name);

struct BranchingParams {
    double offspring_mean = 0.9;
    double p_rep = 0.0;   // repeat retweet of the parent
    double p_conv = 0.0;  // extra retweet of an earlier, non-parent user
    double p_rec = 0.0;   // parent retweets the child back
    double p_loop = 0.0;  // user retweets itself
};

struct GeneratorSpec {
    Shape shape = Shape::star;
    std::size_t n = 10;  // target mass; the branching process may die out earlier
    std::size_t k = 0;   // chain length for star_with_chain
    BranchingParams branching;
    double time_scale = 60.0;  // mean waiting time between a user and its parent
    std::uint64_t seed = 0;
    std::string label;  // empty means the shape name
};

struct MutationCounts {
    std::uint64_t repeats = 0;
    std::uint64_t converges = 0;
    std::uint64_t reciprocals = 0;
    std::uint64_t loops = 0;
};

struct GroundTruth {
    std::string cascade_id;
    Shape shape = Shape::star;
    std::size_t mass = 0;
    std::optional<double> trend;
    std::optional<double> fluctuation;
    std::optional<double> branch;
    bool branch_approximate = false;  // double star: sqrt(N/2), good to about 10%
    std::string label;
    MutationCounts mutations;
};

struct GeneratedCascade {
    std::vector<RetweetEvent> events;  // time ordered, root first
    GroundTruth truth;
};

/// One synthetic cascade. Users are named "u<i>", the root is u0 at time 0.
GeneratedCascade generate(const GeneratorSpec& spec, const std::string& cascade_id);

/// Closed forms for the canonical shapes; empty where no formula exists.
GroundTruth closed_form_truth(Shape shape, std::size_t n, std::size_t k);

// ---------------------------------------------------------------------------
// Corpora

enum class MassLaw { fixed, log_uniform, bimodal };

struct CorpusComponent {
    GeneratorSpec spec;
    double weight = 1.0;
    MassLaw law = MassLaw::fixed;
    std::size_t n_min = 1;
    std::size_t n_max = 1000;  // also caps bimodal draws
    BimodalParams mass_params;
};

struct CorpusSpec {
    std::size_t cascades = 0;
    std::uint64_t seed = 0;
    std::vector<CorpusComponent> components;
};

struct Corpus {
    std::vector<RetweetEvent> events;
    std::vector<GroundTruth> truth;
};

/// Deterministic mixture corpus. Cascade i draws its component and mass from
/// derive_seed(seed, i), so output does not depend on the thread count.
Corpus generate_corpus(const CorpusSpec& spec);

/// JSON corpus description:
/// {"cascades": 1000, "seed": 7, "components": [{"shape": "star", "weight": 1,
///   "n": 10 | {"min": 3, "max": 500} | {"law": "bimodal", "max": 1e5, "params": {...}},
///   "k": 2, "label": "a", "time_scale": 60, "branching": {"offspring_mean": 0.9, ...}}]}
/// A top-level "seed" is overridden by `seed_override` when given.
CorpusSpec parse_corpus_spec(std::string_view json_text, std::optional<std::uint64_t> seed_override = {});

/// cascade_id, shape, closed_form_trend, closed_form_fluct, closed_form_branch, label (NA when undefined).
void write_truth_tsv(std::ostream& out, const std::vector<GroundTruth>& truth);

// ---------------------------------------------------------------------------
// Samplers

/// Draw from the bimodal law restricted to x >= 1.
double sample_bimodal(const BimodalParams& p, std::mt19937_64& rng);

/// Draw from c (x + x0)^-alpha on x >= 1 (alpha > 1).
double sample_power_law(double alpha, double x0, std::mt19937_64& rng);

/// Masses of the two bimodal components on [1, inf).
struct BimodalWeights {
    double power = 0;
    double stretched = 0;
};
BimodalWeights bimodal_component_weights(const BimodalParams& p);

// ---------------------------------------------------------------------------
// Growth-curve families for clustering tests

enum class GrowthFamily { early_spike, late_spike, flat_persist };

/// Noisy growth series of the given family over `buckets` time buckets.
GrowthSeries synth_growth_series(GrowthFamily family, std::size_t buckets, std::mt19937_64& rng);

}  // namespace cascade
