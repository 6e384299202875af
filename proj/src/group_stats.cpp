#include "cascade/group_stats.hpp"

#include <algorithm>
#include <cmath>
#include <istream>
#include <limits>
#include <map>
#include <numeric>
#include <ostream>
#include <random>
#include <set>
#include <unordered_map>
#include <unordered_set>

#include <Eigen/Dense>
#include <boost/math/special_functions/gamma.hpp>

#include "cascade/event_io.hpp"
#include "cascade/numeric.hpp"
#include "cascade/util.hpp"

namespace cascade {

double chi2_survival(double x, double dof) {
    if (dof <= 0) throw StatsError("chi-squared needs positive degrees of freedom");
    if (x <= 0) return 1.0;
    return boost::math::gamma_q(dof / 2.0, x / 2.0);
}

KruskalResult kruskal_wallis(std::span<const std::vector<double>> groups, std::size_t min_group_size) {
    if (groups.size() < 2) throw StatsError("Kruskal-Wallis needs at least two groups");
    std::vector<std::pair<double, std::size_t>> pooled;
    for (std::size_t g = 0; g < groups.size(); ++g) {
        if (groups[g].size() < min_group_size)
            throw StatsError("group " + std::to_string(g) + " has " + std::to_string(groups[g].size()) +
                             " observations, need " + std::to_string(min_group_size));
        for (double v : groups[g]) {
            if (std::isnan(v)) throw StatsError("NaN observation");
            pooled.emplace_back(v, g);
        }
    }
    std::sort(pooled.begin(), pooled.end());
    const auto n = static_cast<double>(pooled.size());
    std::vector<double> rank_sum(groups.size(), 0.0);
    double tie_term = 0;
    for (std::size_t i = 0; i < pooled.size();) {
        std::size_t j = i;
        while (j < pooled.size() && pooled[j].first == pooled[i].first) ++j;
        const double t = static_cast<double>(j - i);
        const double avg_rank = (static_cast<double>(i + 1) + static_cast<double>(j)) / 2.0;
        for (std::size_t k = i; k < j; ++k) rank_sum[pooled[k].second] += avg_rank;
        tie_term += t * t * t - t;
        i = j;
    }
    KruskalResult r;
    r.groups = groups.size();
    r.observations = pooled.size();
    const double correction = 1.0 - tie_term / (n * n * n - n);
    if (correction <= 0) return r;  // every value identical
    double s = 0;
    for (std::size_t g = 0; g < groups.size(); ++g)
        s += rank_sum[g] * rank_sum[g] / static_cast<double>(groups[g].size());
    const double h = 12.0 / (n * (n + 1)) * s - 3.0 * (n + 1);
    r.h = std::max(0.0, h / correction);
    r.p = chi2_survival(r.h, static_cast<double>(groups.size() - 1));
    return r;
}

std::vector<std::pair<std::string, std::string>> read_label_file(std::istream& in, std::string_view column) {
    auto split = [](const std::string& line) {
        std::vector<std::string> cells;
        std::size_t start = 0;
        for (;;) {
            const auto tab = line.find('\t', start);
            cells.push_back(line.substr(start, tab - start));
            if (tab == std::string::npos) break;
            start = tab + 1;
        }
        return cells;
    };
    std::vector<std::pair<std::string, std::string>> out;
    std::string line;
    std::size_t line_no = 0;
    std::size_t label_col = 1;
    std::size_t width = 2;
    bool first = true;
    while (std::getline(in, line)) {
        ++line_no;
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty() || line.front() == '#') continue;
        auto cells = split(line);
        if (first) {
            first = false;
            if (cells.front() == "cascade_id") {
                width = cells.size();
                auto find = [&](std::string_view name) {
                    return static_cast<std::size_t>(std::find(cells.begin(), cells.end(), name) - cells.begin());
                };
                if (!column.empty()) {
                    label_col = find(column);
                    if (label_col == cells.size())
                        throw ParseError(line_no, "no column named '" + std::string(column) + "'");
                } else if (find("label") < cells.size()) {
                    label_col = find("label");
                } else if (find("cluster") < cells.size()) {
                    label_col = find("cluster");
                }
                if (label_col == 0 || width < 2) throw ParseError(line_no, "label column missing");
                continue;
            }
            if (!column.empty()) throw ParseError(line_no, "column selection needs a header line");
        }
        if (cells.size() != width)
            throw ParseError(line_no, "expected " + std::to_string(width) + " tab-separated fields, got " +
                                          std::to_string(cells.size()));
        if (cells.front().empty()) throw ParseError(line_no, "empty cascade_id");
        if (cells[label_col].empty()) throw ParseError(line_no, "empty label");
        out.emplace_back(std::move(cells.front()), std::move(cells[label_col]));
    }
    return out;
}

GroupedMetricTable join_labels(const MetricTable& metrics,
                               std::span<const std::pair<std::string, std::string>> labels) {
    std::unordered_map<std::string, std::string> by_id;
    for (const auto& [id, label] : labels)
        if (!by_id.emplace(id, label).second) throw StatsError("duplicate cascade_id '" + id + "' in labels");
    std::unordered_set<std::string> seen;
    GroupedMetricTable table;
    for (std::size_t i = 0; i < metrics.rows.size(); ++i) {
        const auto& id = metrics.cascade_ids[i];
        if (!seen.insert(id).second) throw StatsError("duplicate cascade_id '" + id + "' in metrics");
        auto it = by_id.find(id);
        if (it == by_id.end()) continue;
        table.cascade_ids.push_back(id);
        table.rows.push_back(metrics.rows[i]);
        table.labels.push_back(it->second);
    }
    return table;
}

std::vector<std::string> label_set(const GroupedMetricTable& table) {
    std::set<std::string> s(table.labels.begin(), table.labels.end());
    return {s.begin(), s.end()};
}

std::vector<double> classifier_features(const MetricVector& m) {
    auto lg = [](double v) { return std::log(v); };
    return {
        lg(static_cast<double>(m.mass)),
        lg(static_cast<double>(m.length) + 1.0),
        lg(static_cast<double>(m.breadth)),
        lg(m.trend + kLogEpsilon),
        lg(m.fluctuation + kLogEpsilon),
        lg(m.branch_deviation + kLogEpsilon),
        lg(m.converge_deviation + kLogEpsilon),
        m.reciprocity,
        m.self_loop_ratio,
        lg(m.avg_activity + kLogEpsilon),
        lg(static_cast<double>(m.reciprocal_edge_count) + 1.0),
        lg(static_cast<double>(m.self_loop_count) + 1.0),
    };
}

double LogisticModel::decision(std::span<const double> x) const {
    double z = bias;
    for (std::size_t j = 0; j < weights.size(); ++j) z += weights[j] * (x[j] - center[j]) / scale[j];
    return z;
}

namespace {

double log1p_exp(double z) { return z > 0 ? z + std::log1p(std::exp(-z)) : std::log1p(std::exp(z)); }
double sigmoid(double z) { return z >= 0 ? 1.0 / (1.0 + std::exp(-z)) : std::exp(z) / (1.0 + std::exp(z)); }

}  // namespace

LogisticModel fit_logistic(const std::vector<std::vector<double>>& x, std::span<const int> y, double l2,
                           std::size_t max_iter) {
    if (x.empty() || x.size() != y.size()) throw StatsError("logistic regression needs matching non-empty x and y");
    const std::size_t n = x.size();
    const std::size_t d = x.front().size();
    LogisticModel model;
    model.center.assign(d, 0.0);
    model.scale.assign(d, 1.0);
    for (std::size_t j = 0; j < d; ++j) {
        std::vector<double> col(n);
        for (std::size_t i = 0; i < n; ++i) col[i] = x[i][j];
        model.center[j] = mean(col);
        const double sd = sample_stddev(col);
        model.scale[j] = sd > 0 ? sd : 1.0;
    }
    const auto dim = static_cast<Eigen::Index>(d + 1);  // last coordinate is the bias
    Eigen::MatrixXd z(n, dim);
    for (std::size_t i = 0; i < n; ++i) {
        for (std::size_t j = 0; j < d; ++j) z(i, j) = (x[i][j] - model.center[j]) / model.scale[j];
        z(i, d) = 1.0;
    }
    Eigen::VectorXd ys(n);
    for (std::size_t i = 0; i < n; ++i) ys(i) = y[i] ? 1.0 : 0.0;
    Eigen::VectorXd penalty = Eigen::VectorXd::Constant(dim, l2);
    penalty(d) = 0.0;

    auto objective = [&](const Eigen::VectorXd& w) {
        const Eigen::VectorXd s = z * w;
        double loss = 0;
        for (Eigen::Index i = 0; i < s.size(); ++i) loss += log1p_exp(s(i)) - ys(i) * s(i);
        return loss / static_cast<double>(n) + 0.5 * (penalty.array() * w.array().square()).sum();
    };

    Eigen::VectorXd w = Eigen::VectorXd::Zero(dim);
    double f = objective(w);
    for (std::size_t it = 0; it < max_iter; ++it) {
        const Eigen::VectorXd s = z * w;
        Eigen::VectorXd p(n), weight(n);
        for (std::size_t i = 0; i < n; ++i) {
            p(i) = sigmoid(s(i));
            weight(i) = p(i) * (1 - p(i));
        }
        const Eigen::VectorXd grad =
            z.transpose() * (p - ys) / static_cast<double>(n) + penalty.cwiseProduct(w);
        if (grad.lpNorm<Eigen::Infinity>() < 1e-10) break;
        Eigen::MatrixXd hess = z.transpose() * weight.asDiagonal() * z / static_cast<double>(n);
        hess.diagonal() += penalty + Eigen::VectorXd::Constant(dim, 1e-12);
        const Eigen::VectorXd step = hess.ldlt().solve(grad);
        double t = 1.0;
        bool improved = false;
        for (int half = 0; half < 40; ++half, t *= 0.5) {
            const Eigen::VectorXd cand = w - t * step;
            const double fc = objective(cand);
            if (fc <= f) {
                improved = fc < f;
                w = cand;
                f = fc;
                break;
            }
        }
        if (!improved) break;
    }
    model.weights.assign(w.data(), w.data() + d);
    model.bias = w(d);
    return model;
}

double cross_validated_accuracy(const std::vector<std::vector<double>>& x, std::span<const int> y, double l2,
                                std::size_t folds, std::uint64_t seed) {
    if (folds < 2) throw StatsError("cross-validation needs at least two folds");
    std::vector<std::size_t> fold(x.size());
    std::mt19937_64 rng(seed);
    for (int cls : {0, 1}) {
        std::vector<std::size_t> idx;
        for (std::size_t i = 0; i < y.size(); ++i)
            if (y[i] == cls) idx.push_back(i);
        std::shuffle(idx.begin(), idx.end(), rng);
        for (std::size_t k = 0; k < idx.size(); ++k) fold[idx[k]] = k % folds;
    }
    double total = 0;
    std::size_t used = 0;
    for (std::size_t f = 0; f < folds; ++f) {
        std::vector<std::vector<double>> train_x;
        std::vector<int> train_y;
        std::vector<std::size_t> test;
        for (std::size_t i = 0; i < x.size(); ++i) {
            if (fold[i] == f) {
                test.push_back(i);
            } else {
                train_x.push_back(x[i]);
                train_y.push_back(y[i]);
            }
        }
        if (test.empty() || train_x.empty()) continue;
        const LogisticModel model = fit_logistic(train_x, train_y, l2);
        std::size_t correct = 0;
        for (std::size_t i : test) correct += model.predict(x[i]) == y[i];
        total += static_cast<double>(correct) / static_cast<double>(test.size());
        ++used;
    }
    if (used == 0) throw StatsError("no usable folds");
    return total / static_cast<double>(used);
}

namespace {

struct PairOutcome {
    double accuracy = std::numeric_limits<double>::quiet_NaN();
    std::size_t n = 0;
    std::vector<std::string> warnings;
};

PairOutcome evaluate_pair(const GroupedMetricTable& table, const std::vector<std::size_t>& a_rows,
                          const std::vector<std::size_t>& b_rows, const std::string& a, const std::string& b,
                          const DistinguishOptions& opt) {
    PairOutcome out;
    const std::size_t n = std::min(a_rows.size(), b_rows.size());
    out.n = n;
    if (n < opt.min_group_size) {
        out.warnings.push_back(a + " vs " + b + ": insufficient cascades (" + std::to_string(n) + " < " +
                               std::to_string(opt.min_group_size) + ")");
        return out;
    }
    const std::uint64_t pair_seed = derive_seed(opt.seed, a + '\x1f' + b);
    std::mt19937_64 rng(pair_seed);
    auto take = [&](std::vector<std::size_t> rows) {
        std::shuffle(rows.begin(), rows.end(), rng);
        rows.resize(n);
        std::sort(rows.begin(), rows.end());
        return rows;
    };
    const auto sa = take(a_rows);
    const auto sb = take(b_rows);

    std::vector<std::vector<double>> raw;
    std::vector<int> y;
    for (std::size_t r : sa) {
        raw.push_back(classifier_features(table.rows[r]));
        y.push_back(0);
    }
    for (std::size_t r : sb) {
        raw.push_back(classifier_features(table.rows[r]));
        y.push_back(1);
    }
    std::vector<std::size_t> keep;
    for (std::size_t j = 0; j < kFeatureCount; ++j) {
        bool constant = true;
        for (const auto& row : raw) constant = constant && row[j] == raw.front()[j];
        if (constant)
            out.warnings.push_back(a + " vs " + b + ": dropped zero-variance feature " + std::to_string(j));
        else
            keep.push_back(j);
    }
    if (keep.empty()) {
        out.accuracy = 0.5;
        return out;
    }
    std::vector<std::vector<double>> x(raw.size(), std::vector<double>(keep.size()));
    for (std::size_t i = 0; i < raw.size(); ++i)
        for (std::size_t k = 0; k < keep.size(); ++k) x[i][k] = raw[i][keep[k]];

    const std::uint64_t cv_seed = derive_seed(pair_seed, 1);
    double best = 0;
    for (double l2 : opt.l2_grid) best = std::max(best, cross_validated_accuracy(x, y, l2, opt.folds, cv_seed));
    out.accuracy = best;
    return out;
}

template <bool Parallel>
DistinguishabilityMatrix distinguish_impl(const GroupedMetricTable& table, const DistinguishOptions& opt) {
    DistinguishabilityMatrix m;
    m.labels = label_set(table);
    const std::size_t g = m.labels.size();
    m.accuracy.assign(g * g, std::numeric_limits<double>::quiet_NaN());
    m.pair_size.assign(g * g, 0);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < g; ++i) index[m.labels[i]] = i;
    std::vector<std::vector<std::size_t>> rows(g);
    for (std::size_t r = 0; r < table.rows.size(); ++r) rows[index[table.labels[r]]].push_back(r);

    std::vector<std::pair<std::size_t, std::size_t>> pairs;
    for (std::size_t i = 0; i < g; ++i)
        for (std::size_t j = i + 1; j < g; ++j) pairs.emplace_back(i, j);
    std::vector<PairOutcome> outcomes(pairs.size());
    const auto count = static_cast<std::int64_t>(pairs.size());
    auto body = [&](std::int64_t p) {
        const auto [i, j] = pairs[p];
        outcomes[p] = evaluate_pair(table, rows[i], rows[j], m.labels[i], m.labels[j], opt);
    };
    if constexpr (Parallel) {
#pragma omp parallel for schedule(dynamic, 1)
        for (std::int64_t p = 0; p < count; ++p) body(p);
    } else {
        for (std::int64_t p = 0; p < count; ++p) body(p);
    }
    for (std::size_t p = 0; p < pairs.size(); ++p) {
        const auto [i, j] = pairs[p];
        m.accuracy[i * g + j] = m.accuracy[j * g + i] = outcomes[p].accuracy;
        m.pair_size[i * g + j] = m.pair_size[j * g + i] = outcomes[p].n;
        for (auto& w : outcomes[p].warnings) m.warnings.push_back(std::move(w));
    }
    return m;
}

std::string format_cell(double v) { return std::isnan(v) ? "NA" : format_double(v); }

}  // namespace

DistinguishabilityMatrix pairwise_distinguishability(const GroupedMetricTable& table,
                                                     const DistinguishOptions& options) {
    return distinguish_impl<true>(table, options);
}

DistinguishabilityMatrix ref::pairwise_distinguishability(const GroupedMetricTable& table,
                                                          const DistinguishOptions& options) {
    return distinguish_impl<false>(table, options);
}

void write_distinguishability_tsv(std::ostream& out, const DistinguishabilityMatrix& m) {
    out << "label";
    for (const auto& l : m.labels) out << '\t' << l;
    out << '\n';
    for (std::size_t i = 0; i < m.size(); ++i) {
        out << m.labels[i];
        for (std::size_t j = 0; j < m.size(); ++j) out << '\t' << format_cell(m.at(i, j));
        out << '\n';
    }
}

void write_distinguishability_pairs_tsv(std::ostream& out, const DistinguishabilityMatrix& m) {
    out << "group_a\tgroup_b\taccuracy\tn_per_group\n";
    for (std::size_t i = 0; i < m.size(); ++i)
        for (std::size_t j = i + 1; j < m.size(); ++j)
            out << m.labels[i] << '\t' << m.labels[j] << '\t' << format_cell(m.at(i, j)) << '\t' << m.n_at(i, j)
                << '\n';
}

std::vector<KruskalRow> kruskal_by_metric(const GroupedMetricTable& table, std::size_t min_group_size) {
    const auto labels = label_set(table);
    std::map<std::string, std::size_t> index;
    for (std::size_t i = 0; i < labels.size(); ++i) index[labels[i]] = i;
    std::vector<KruskalRow> out;
    for (auto name : kNumericMetricNames) {
        std::vector<std::vector<double>> groups(labels.size());
        for (std::size_t r = 0; r < table.rows.size(); ++r)
            groups[index[table.labels[r]]].push_back(metric_value(table.rows[r], name));
        std::vector<std::vector<double>> usable;
        for (auto& grp : groups)
            if (grp.size() >= min_group_size) usable.push_back(std::move(grp));
        KruskalRow row;
        row.metric = name;
        if (usable.size() < 2) {
            row.valid = false;
            row.note = "fewer than two groups with enough observations";
        } else {
            row.result = kruskal_wallis(usable, min_group_size);
            if (usable.size() < labels.size()) row.note = "small groups skipped";
        }
        out.push_back(std::move(row));
    }
    return out;
}

void write_kruskal_tsv(std::ostream& out, std::span<const KruskalRow> rows, std::string_view group_source) {
    out << "metric\tgroup_source\tH\tp\n";
    for (const auto& r : rows) {
        out << r.metric << '\t' << group_source << '\t';
        if (r.valid)
            out << format_double(r.result.h) << '\t' << format_double(r.result.p) << '\n';
        else
            out << "NA\tNA\n";
    }
}

AxisScale default_axis_scale(std::string_view metric) {
    return metric == "reciprocity" || metric == "self_loop_ratio" ? AxisScale::linear : AxisScale::log;
}

namespace {

std::vector<double> axis_edges(AxisScale scale, double lo, double hi, std::size_t bpd, std::size_t linear_bins) {
    std::vector<double> edges;
    if (scale == AxisScale::log) {
        const auto nb = std::max<std::size_t>(
            1, static_cast<std::size_t>(std::ceil(std::log10(hi / lo) * static_cast<double>(bpd) - 1e-9)));
        for (std::size_t i = 0; i <= nb; ++i) edges.push_back(lo * std::pow(10.0, static_cast<double>(i) / bpd));
        edges.front() = lo;
        edges.back() = std::max(edges.back(), hi);
        if (edges.back() <= edges.front()) edges.back() = lo * std::pow(10.0, 1.0 / bpd);
    } else {
        if (hi <= lo) {
            lo -= 0.5;
            hi += 0.5;
        }
        for (std::size_t i = 0; i <= linear_bins; ++i)
            edges.push_back(lo + (hi - lo) * static_cast<double>(i) / static_cast<double>(linear_bins));
        edges.back() = hi;
    }
    return edges;
}

std::size_t locate(const std::vector<double>& edges, double v) {
    auto it = std::upper_bound(edges.begin(), edges.end(), v);
    auto i = static_cast<std::size_t>(it - edges.begin());
    return std::clamp<std::size_t>(i, 1, edges.size() - 1) - 1;
}

double center(AxisScale s, double a, double b) { return s == AxisScale::log ? std::sqrt(a * b) : 0.5 * (a + b); }

}  // namespace

JointHistogram joint_histogram(std::span<const double> xs, std::span<const double> ys, AxisScale x_scale,
                               AxisScale y_scale, std::size_t bins_per_decade, std::size_t linear_bins) {
    if (xs.size() != ys.size()) throw StatsError("joint histogram needs paired values");
    if (bins_per_decade == 0 || linear_bins == 0) throw StatsError("bin counts must be positive");
    JointHistogram h;
    h.x_scale = x_scale;
    h.y_scale = y_scale;
    std::vector<std::size_t> kept;
    double xlo = std::numeric_limits<double>::infinity(), xhi = -xlo, ylo = xlo, yhi = -xlo;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        const bool ok = std::isfinite(xs[i]) && std::isfinite(ys[i]) && (x_scale == AxisScale::linear || xs[i] > 0) &&
                        (y_scale == AxisScale::linear || ys[i] > 0);
        if (!ok) {
            ++h.dropped;
            continue;
        }
        kept.push_back(i);
        xlo = std::min(xlo, xs[i]);
        xhi = std::max(xhi, xs[i]);
        ylo = std::min(ylo, ys[i]);
        yhi = std::max(yhi, ys[i]);
    }
    if (kept.empty()) throw StatsError("no plottable points for the joint histogram");
    h.points = kept.size();
    h.x_edges = axis_edges(x_scale, xlo, xhi, bins_per_decade, linear_bins);
    h.y_edges = axis_edges(y_scale, ylo, yhi, bins_per_decade, linear_bins);
    std::vector<std::uint64_t> counts(h.nx() * h.ny(), 0);
    for (std::size_t i : kept) ++counts[locate(h.x_edges, xs[i]) * h.ny() + locate(h.y_edges, ys[i])];
    h.density.resize(counts.size());
    for (std::size_t a = 0; a < h.nx(); ++a) {
        for (std::size_t b = 0; b < h.ny(); ++b) {
            const double area = (h.x_edges[a + 1] - h.x_edges[a]) * (h.y_edges[b + 1] - h.y_edges[b]);
            h.density[a * h.ny() + b] =
                static_cast<double>(counts[a * h.ny() + b]) / (static_cast<double>(h.points) * area);
        }
    }
    return h;
}

void write_joint_tsv(std::ostream& out, const JointHistogram& h) {
    out << "x_center\ty_center\tdensity\n";
    for (std::size_t a = 0; a < h.nx(); ++a) {
        const double xc = center(h.x_scale, h.x_edges[a], h.x_edges[a + 1]);
        for (std::size_t b = 0; b < h.ny(); ++b) {
            const double yc = center(h.y_scale, h.y_edges[b], h.y_edges[b + 1]);
            out << format_double(xc) << '\t' << format_double(yc) << '\t' << format_double(h.density[a * h.ny() + b])
                << '\n';
        }
    }
}

double star_trend_floor(double mass) { return 2.0 - 2.0 / mass; }
double chain_trend_ceiling(double mass) { return (mass + 1.0) / 3.0; }

void write_trend_bounds_tsv(std::ostream& out, double max_mass, std::size_t points_per_decade) {
    out << "mass\tstar_floor\tchain_ceiling\n";
    const double top = std::max(max_mass, 2.0);
    const auto steps = static_cast<std::size_t>(std::ceil(std::log10(top / 2.0) * points_per_decade));
    for (std::size_t i = 0; i <= steps; ++i) {
        const double n = std::min(top, 2.0 * std::pow(10.0, static_cast<double>(i) / points_per_decade));
        out << format_double(n) << '\t' << format_double(star_trend_floor(n)) << '\t'
            << format_double(chain_trend_ceiling(n)) << '\n';
    }
}

double log_correlation(std::span<const double> xs, std::span<const double> ys) {
    if (xs.size() != ys.size()) throw StatsError("log correlation needs paired values");
    std::vector<double> lx, ly;
    for (std::size_t i = 0; i < xs.size(); ++i) {
        if (xs[i] > 0 && ys[i] > 0) {
            lx.push_back(std::log(xs[i]));
            ly.push_back(std::log(ys[i]));
        }
    }
    return pearson(lx, ly);
}

}  // namespace cascade
