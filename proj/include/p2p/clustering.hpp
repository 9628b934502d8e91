#pragma once

#include <cstdint>
#include <span>
#include <vector>

namespace p2p {

using Vector = std::vector<double>;

struct ClusteringResult {
    std::size_t k = 0;
    std::vector<std::size_t> assignments;
    std::vector<Vector> centroids;
    double inertia = 0.0;             // sum of squared distances to the assigned centroid
    double silhouette = 0.0;          // mean silhouette; 0 when k < 2
    std::vector<double> inertia_history;  // per Lloyd iteration of the winning start
};

inline constexpr std::size_t kKmeansMaxIterations = 300;
inline constexpr std::size_t kKmeansRestarts = 10;

double squared_distance(std::span<const double> a, std::span<const double> b);

/// Lloyd iteration from k-means++ seeds, best of `restarts` starts by inertia.
/// Deterministic given `seed`. Throws ValidationError when k is 0 or exceeds
/// the number of vectors, or the vectors differ in dimension.
ClusteringResult kmeans(std::span<const Vector> vectors, std::size_t k, std::uint64_t seed,
                        std::size_t restarts = kKmeansRestarts);

/// Mean silhouette coefficient of an assignment (0 when fewer than 2 clusters).
double silhouette_score(std::span<const Vector> vectors, std::span<const std::size_t> assignments);

struct KSelection {
    std::vector<std::size_t> ks;
    std::vector<double> inertia;
    std::vector<double> silhouette;
    std::size_t elbow = 0;
    std::size_t chosen = 0;
};

/// Silhouettes below this mean no cluster structure; the range minimum is chosen.
inline constexpr double kMinimumSilhouette = 0.25;

/// Elbow by maximum distance to the chord of the normalised inertia curve,
/// then argmax silhouette within two steps of the elbow.
KSelection select_k(std::span<const Vector> vectors, std::span<const std::size_t> k_range, std::uint64_t seed);

/// Collapses clusters: `groups` lists, for each output cluster, the input
/// cluster indices it absorbs. Centroids are member-weighted means.
ClusteringResult merge_clusters(std::span<const Vector> vectors, const ClusteringResult& result,
                                const std::vector<std::vector<std::size_t>>& groups);

}  // namespace p2p
