#include "cascade/dynamics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <optional>
#include <ostream>
#include <random>

#include <json.hpp>

#include "cascade/util.hpp"

namespace cascade {

std::vector<double> rebin_relative_time(const GrowthSeries& series, std::size_t grid_size) {
    if (grid_size == 0) throw DynamicsError("grid size must be positive");
    const std::size_t buckets = series.counts.size();
    if (buckets == 0) throw DynamicsError("empty growth series");
    std::vector<double> grid(grid_size, 0.0);
    // Bucket i covers [i/B, (i+1)/B); cell j covers [j/G, (j+1)/G). Work in units of 1/(B*G).
    const auto B = static_cast<std::uint64_t>(buckets);
    const auto G = static_cast<std::uint64_t>(grid_size);
    std::size_t j = 0;
    for (std::size_t i = 0; i < buckets; ++i) {
        const double count = static_cast<double>(series.counts[i]);
        const std::uint64_t lo = i * G, hi = (i + 1) * G;
        while (j < grid_size && (j + 1) * B <= lo) ++j;
        for (std::size_t c = j; c < grid_size && c * B < hi; ++c) {
            const std::uint64_t overlap = std::min(hi, (c + 1) * B) - std::max(lo, c * B);
            grid[c] += count * static_cast<double>(overlap) / static_cast<double>(G);
        }
    }
    return grid;
}

std::vector<double> max_scale(std::span<const double> values) {
    const double peak = values.empty() ? 0.0 : *std::max_element(values.begin(), values.end());
    if (!(peak > 0)) throw DynamicsError("cannot max-scale an all-zero series");
    std::vector<double> out(values.begin(), values.end());
    for (double& v : out) v /= peak;
    return out;
}

NormalizedSeries normalize(const GrowthSeries& series, std::size_t grid_size, std::string cascade_id) {
    if (series.degenerate || series.lifetime <= 0)
        throw DynamicsError("degenerate series: zero lifetime" +
                            (cascade_id.empty() ? std::string() : " (cascade " + cascade_id + ")"));
    const auto grid = rebin_relative_time(series, grid_size);
    return {std::move(cascade_id), max_scale(grid)};
}

namespace {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

template <bool Parallel>
void assign_points(std::span<const std::vector<double>> pts, const std::vector<std::vector<double>>& centroids,
                   std::vector<std::uint32_t>& labels, std::vector<double>& dist2) {
    const auto n = static_cast<std::int64_t>(pts.size());
    auto body = [&](std::int64_t i) {
        double best = std::numeric_limits<double>::infinity();
        std::uint32_t arg = 0;
        for (std::size_t c = 0; c < centroids.size(); ++c) {
            const double d = squared_distance(pts[i], centroids[c]);
            if (d < best) {
                best = d;
                arg = static_cast<std::uint32_t>(c);
            }
        }
        labels[i] = arg;
        dist2[i] = best;
    };
    if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
        for (std::int64_t i = 0; i < n; ++i) body(i);
    } else {
        for (std::int64_t i = 0; i < n; ++i) body(i);
    }
}

template <bool Parallel>
std::vector<std::vector<double>> seed_plus_plus(std::span<const std::vector<double>> pts, std::size_t k,
                                                std::mt19937_64& rng) {
    const std::size_t n = pts.size();
    std::vector<std::vector<double>> centroids;
    std::uniform_int_distribution<std::size_t> first(0, n - 1);
    centroids.push_back(pts[first(rng)]);
    std::vector<double> d2(n);
    std::vector<std::uint32_t> scratch(n);
    assign_points<Parallel>(pts, centroids, scratch, d2);
    std::uniform_real_distribution<double> unit(0.0, 1.0);
    while (centroids.size() < k) {
        double total = 0;
        for (double d : d2) total += d;
        std::size_t pick = 0;
        if (total > 0) {
            const double target = unit(rng) * total;
            double acc = 0;
            pick = n - 1;
            for (std::size_t i = 0; i < n; ++i) {
                acc += d2[i];
                if (acc > target) {
                    pick = i;
                    break;
                }
            }
        } else {
            pick = first(rng);
        }
        centroids.push_back(pts[pick]);
        const auto& c = centroids.back();
        const auto ni = static_cast<std::int64_t>(n);
        if constexpr (Parallel) {
#pragma omp parallel for schedule(static)
            for (std::int64_t i = 0; i < ni; ++i) d2[i] = std::min(d2[i], squared_distance(pts[i], c));
        } else {
            for (std::int64_t i = 0; i < ni; ++i) d2[i] = std::min(d2[i], squared_distance(pts[i], c));
        }
    }
    return centroids;
}

void recompute_means(std::span<const std::vector<double>> pts, const std::vector<std::uint32_t>& labels,
                     std::vector<std::vector<double>>& centroids, std::vector<std::size_t>& sizes) {
    const std::size_t dim = pts.front().size();
    sizes.assign(centroids.size(), 0);
    for (auto& c : centroids) c.assign(dim, 0.0);
    for (std::size_t i = 0; i < pts.size(); ++i) {
        auto& c = centroids[labels[i]];
        for (std::size_t d = 0; d < dim; ++d) c[d] += pts[i][d];
        ++sizes[labels[i]];
    }
    for (std::size_t c = 0; c < centroids.size(); ++c)
        if (sizes[c] > 0)
            for (double& v : centroids[c]) v /= static_cast<double>(sizes[c]);
}

template <bool Parallel>
ClusterModel lloyd(std::span<const std::vector<double>> pts, const KMeansOptions& opt, std::uint64_t run_seed) {
    std::mt19937_64 rng(run_seed);
    ClusterModel m;
    m.k = opt.k;
    m.seed = opt.seed;
    m.centroids = seed_plus_plus<Parallel>(pts, opt.k, rng);
    const std::size_t n = pts.size();
    std::vector<std::uint32_t> labels(n), previous;
    std::vector<double> d2(n);

    for (std::size_t iter = 0; iter < opt.max_iter; ++iter) {
        assign_points<Parallel>(pts, m.centroids, labels, d2);
        double inertia = 0;
        for (double d : d2) inertia += d;
        m.inertia_trace.push_back(inertia);
        m.iterations = iter + 1;
        if (labels == previous) break;
        if (iter > 0 && opt.tol > 0) {
            const double before = m.inertia_trace[m.inertia_trace.size() - 2];
            if (before - inertia <= opt.tol * before) {
                previous = labels;
                break;
            }
        }
        previous = labels;
        recompute_means(pts, labels, m.centroids, m.sizes);

        // Empty clusters take the points currently worst served by their centroid.
        std::vector<char> taken(n, 0);
        for (std::size_t c = 0; c < opt.k; ++c) {
            if (m.sizes[c] > 0) continue;
            std::size_t far = 0;
            double worst = -1;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i] && d2[i] > worst) {
                    worst = d2[i];
                    far = i;
                }
            }
            taken[far] = 1;
            m.centroids[c] = pts[far];
        }
    }
    m.assignments = previous;
    recompute_means(pts, m.assignments, m.centroids, m.sizes);
    m.inertia = 0;
    for (std::size_t i = 0; i < n; ++i) m.inertia += squared_distance(pts[i], m.centroids[m.assignments[i]]);
    return m;
}

template <bool Parallel>
ClusterModel kmeans_impl(std::span<const std::vector<double>> pts, const KMeansOptions& opt) {
    if (opt.k < 1) throw DynamicsError("k must be at least 1");
    if (opt.k > pts.size())
        throw DynamicsError("k = " + std::to_string(opt.k) + " exceeds the number of series (" +
                            std::to_string(pts.size()) + ")");
    const std::size_t dim = pts.front().size();
    for (const auto& p : pts)
        if (p.size() != dim) throw DynamicsError("series lengths differ");

    std::optional<ClusterModel> best;
    for (std::size_t run = 0; run < std::max<std::size_t>(opt.n_init, 1); ++run) {
        ClusterModel m = lloyd<Parallel>(pts, opt, derive_seed(opt.seed, run));
        if (!best || m.inertia < best->inertia) best = std::move(m);
    }
    return std::move(*best);
}

}  // namespace

ClusterModel kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options) {
    return kmeans_impl<true>(points, options);
}

ClusterModel ref::kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options) {
    return kmeans_impl<false>(points, options);
}

double adjusted_rand_index(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b) {
    if (a.size() != b.size()) throw std::invalid_argument("labelings differ in length");
    std::map<std::pair<std::uint32_t, std::uint32_t>, double> joint;
    std::map<std::uint32_t, double> ra, rb;
    for (std::size_t i = 0; i < a.size(); ++i) {
        joint[{a[i], b[i]}] += 1;
        ra[a[i]] += 1;
        rb[b[i]] += 1;
    }
    auto pairs = [](double n) { return n * (n - 1) / 2; };
    double index = 0, sa = 0, sb = 0;
    for (const auto& [key, n] : joint) index += pairs(n);
    for (const auto& [key, n] : ra) sa += pairs(n);
    for (const auto& [key, n] : rb) sb += pairs(n);
    const double total = pairs(static_cast<double>(a.size()));
    const double expected = sa * sb / total;
    const double max_index = 0.5 * (sa + sb);
    if (max_index == expected) return 1.0;
    return (index - expected) / (max_index - expected);
}

void write_cluster_json(std::ostream& out, const ClusterModel& m) {
    nlohmann::ordered_json j;
    j["k"] = m.k;
    j["seed"] = m.seed;
    j["inertia"] = m.inertia;
    j["centroids"] = m.centroids;
    j["sizes"] = m.sizes;
    out << j.dump(2) << '\n';
}

void write_assignments_tsv(std::ostream& out, std::span<const std::string> ids, const ClusterModel& m) {
    out << "cascade_id\tcluster\n";
    for (std::size_t i = 0; i < ids.size(); ++i) out << ids[i] << '\t' << m.assignments[i] << '\n';
}

}  // namespace cascade
