#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "cascade/graph.hpp"

namespace cascade {

class DynamicsError : public std::invalid_argument {
public:
    using std::invalid_argument::invalid_argument;
};

struct NormalizedSeries {
    std::string cascade_id;
    std::vector<double> values;  // grid_size points in [0, 1], max == 1
};

/// Rebins the growth curve onto `grid_size` uniform cells of relative time.
/// Each time bucket spreads its count over the cells it overlaps, in
/// proportion to the overlap. Returned values are not max-scaled, so they
/// still sum to the original number of users.
std::vector<double> rebin_relative_time(const GrowthSeries& series, std::size_t grid_size);

/// Lifetime-normalized, max-scaled curve. Throws DynamicsError for degenerate
/// (zero lifetime) or empty series.
NormalizedSeries normalize(const GrowthSeries& series, std::size_t grid_size = 100,
                           std::string cascade_id = {});

/// Divides by the maximum; all-zero input is rejected.
std::vector<double> max_scale(std::span<const double> values);

struct KMeansOptions {
    std::size_t k = 9;
    std::uint64_t seed = 0;
    std::size_t max_iter = 300;
    std::size_t n_init = 10;
    double tol = 0.0;  // stop when inertia improves by no more than tol (relative)
};

struct ClusterModel {
    std::size_t k = 0;
    std::uint64_t seed = 0;
    std::vector<std::vector<double>> centroids;
    std::vector<std::uint32_t> assignments;  // index aligned with the input series
    std::vector<std::size_t> sizes;
    double inertia = 0.0;
    std::size_t iterations = 0;
    std::vector<double> inertia_trace;  // per Lloyd iteration, for the kept restart
};

/// Lloyd iteration with k-means++ seeding and `n_init` seeded restarts; the
/// lowest-inertia restart is kept. Empty clusters are reseeded with the point
/// farthest from its centroid. Point-to-centroid distances are computed in
/// parallel; all reductions are serial so results do not depend on thread count.
ClusterModel kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options = {});

/// Adjusted Rand index between two labelings of the same items.
double adjusted_rand_index(std::span<const std::uint32_t> a, std::span<const std::uint32_t> b);

void write_cluster_json(std::ostream& out, const ClusterModel& model);
void write_assignments_tsv(std::ostream& out, std::span<const std::string> ids, const ClusterModel& model);

namespace ref {

/// Single-threaded reference for cascade::kmeans; produces identical models.
ClusterModel kmeans(std::span<const std::vector<double>> points, const KMeansOptions& options = {});

}  // namespace ref

}  // namespace cascade
