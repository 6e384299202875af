#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "cascade/metrics.hpp"

namespace cascade {

class StatsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

// ---------------------------------------------------------------------------
// Kruskal-Wallis

struct KruskalResult {
    double h = 0.0;
    double p = 1.0;
    std::size_t groups = 0;
    std::size_t observations = 0;
};

/// Upper tail of the chi-squared distribution.
double chi2_survival(double x, double dof);

/// Rank-based H statistic with tie correction; p from chi-squared with
/// (groups - 1) degrees of freedom. Needs >= 2 groups of >= `min_group_size`.
KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups, std::size_t min_group_size = 5);

// ---------------------------------------------------------------------------
// Grouped tables and labels

struct GroupedMetricTable {
    std::vector<std::string> cascade_ids;
    std::vector<MetricVector> rows;
    std::vector<std::string> labels;  // one per row
};

/// (cascade_id, label) pairs from a two-column TSV. With a header line starting
/// "cascade_id" the label comes from `column`, else from "label", else "cluster",
/// else the second column; wider files such as truth.tsv work that way.
std::vector<std::pair<std::string, std::string>> read_label_file(std::istream& in, std::string_view column = {});

/// Inner join of metrics and labels. Duplicate ids in either input throw StatsError.
GroupedMetricTable join_labels(const MetricTable& metrics,
                               std::span<const std::pair<std::string, std::string>> labels);

/// Sorted distinct labels.
std::vector<std::string> label_set(const GroupedMetricTable& table);

// ---------------------------------------------------------------------------
// Linear-classifier distinguishability

inline constexpr std::size_t kFeatureCount = 12;
inline constexpr double kLogEpsilon = 1e-6;

/// Classifier features: heavy-tailed metrics on a log scale, reciprocity and
/// self-loop ratio kept linear.
std::vector<double> classifier_features(const MetricVector& m);

struct LogisticModel {
    std::vector<double> weights;  // on standardized features
    double bias = 0.0;
    std::vector<double> center;
    std::vector<double> scale;

    double decision(std::span<const double> x) const;
    int predict(std::span<const double> x) const { return decision(x) > 0 ? 1 : 0; }
};

/// L2-penalized logistic regression (mean log-loss + l2/2 |w|^2, bias not
/// penalized) fitted by Newton's method on standardized features.
LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, std::span<const int> y, double l2,
                           std::size_t max_iter = 100);

/// Mean held-out accuracy over stratified folds.
double cross_validated_accuracy(const std::vector<std::vector<double>>& x, std::span<const int> y, double l2,
                                std::size_t folds, std::uint64_t seed);

struct DistinguishOptions {
    std::uint64_t seed = 0;
    std::size_t min_group_size = 50;
    std::size_t folds = 5;
    std::vector<double> l2_grid = {1e-3, 1e-2, 1e-1, 1.0, 10.0};
};

struct DistinguishabilityMatrix {
    std::vector<std::string> labels;
    std::vector<double> accuracy;         // labels.size()^2, NaN on the diagonal and for insufficient pairs
    std::vector<std::size_t> pair_size;   // balanced per-group size used for each pair
    std::vector<std::string> warnings;

    std::size_t size() const { return labels.size(); }
    double at(std::size_t i, std::size_t j) const { return accuracy[i * labels.size() + j]; }
    std::size_t n_at(std::size_t i, std::size_t j) const { return pair_size[i * labels.size() + j]; }
};

/// Balanced two-group accuracy of the best regularization setting, for every label pair.
/// Pairs are evaluated in parallel, each under its own derived seed.
DistinguishabilityMatrix pairwise_distinguishability(const GroupedMetricTable& table,
                                                     const DistinguishOptions& options = {});

void write_distinguishability_tsv(std::ostream& out, const DistinguishabilityMatrix& m);
void write_distinguishability_pairs_tsv(std::ostream& out, const DistinguishabilityMatrix& m);

struct KruskalRow {
    std::string metric;
    KruskalResult result;
    bool valid = true;
    std::string note;
};

/// Kruskal-Wallis of every numeric metric across the table's groups.
std::vector<KruskalRow> kruskal_by_metric(const GroupedMetricTable& table, std::size_t min_group_size = 5);
void write_kruskal_tsv(std::ostream& out, std::span<const KruskalRow> rows, std::string_view group_source);

// ---------------------------------------------------------------------------
// Joint histograms

enum class AxisScale { log, linear };

/// Linear for bounded ratios (reciprocity, self_loop_ratio), log otherwise.
AxisScale default_axis_scale(std::string_view metric);

struct JointHistogram {
    AxisScale x_scale = AxisScale::log;
    AxisScale y_scale = AxisScale::log;
    std::vector<double> x_edges, y_edges;
    std::vector<double> density;  // row-major by x bin
    std::size_t points = 0;
    std::size_t dropped = 0;      // non-positive values on a log axis

    std::size_t nx() const { return x_edges.size() - 1; }
    std::size_t ny() const { return y_edges.size() - 1; }
};

JointHistogram joint_histogram(std::span<const double> xs, std::span<const double> ys, AxisScale x_scale,
                               AxisScale y_scale, std::size_t bins_per_decade = 10, std::size_t linear_bins = 20);

void write_joint_tsv(std::ostream& out, const JointHistogram& h);

/// Star floor 2 - 2/N and chain ceiling (N + 1)/3 of the Wiener trend.
double star_trend_floor(double mass);
double chain_trend_ceiling(double mass);

/// (mass, floor, ceiling) rows on a log-spaced mass grid from 2 to max_mass.
void write_trend_bounds_tsv(std::ostream& out, double max_mass, std::size_t points_per_decade = 20);

/// Pearson correlation of log values; pairs with a non-positive entry are skipped.
double log_correlation(std::span<const double> xs, std::span<const double> ys);

namespace ref {

/// Single-threaded reference for cascade::pairwise_distinguishability.
DistinguishabilityMatrix pairwise_distinguishability(const GroupedMetricTable& table,
                                                     const DistinguishOptions& options = {});

}  // namespace ref

}  // namespace cascade
