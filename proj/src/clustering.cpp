#include "p2p/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <random>

#include "p2p/errors.hpp"

namespace p2p {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double s = 0.0;
    for (std::size_t i = 0; i < a.size(); ++i) {
        const double d = a[i] - b[i];
        s += d * d;
    }
    return s;
}

namespace {

void check_input(std::span<const Vector> vectors) {
    if (vectors.empty()) throw ValidationError("clustering needs at least one vector");
    const std::size_t dim = vectors.front().size();
    for (const auto& v : vectors)
        if (v.size() != dim) throw DimensionError("clustering vectors differ in dimension");
}

std::vector<Vector> plus_plus_seeds(std::span<const Vector> vectors, std::size_t k, std::mt19937_64& rng) {
    std::vector<Vector> centres;
    centres.reserve(k);
    std::uniform_int_distribution<std::size_t> pick(0, vectors.size() - 1);
    centres.push_back(vectors[pick(rng)]);
    std::vector<double> d2(vectors.size(), std::numeric_limits<double>::infinity());
    while (centres.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < vectors.size(); ++i) {
            d2[i] = std::min(d2[i], squared_distance(vectors[i], centres.back()));
            total += d2[i];
        }
        std::size_t next = 0;
        if (total > 0.0) {
            std::uniform_real_distribution<double> u(0.0, total);
            double target = u(rng);
            for (next = 0; next + 1 < vectors.size(); ++next) {
                target -= d2[next];
                if (target < 0.0) break;
            }
        } else {
            next = pick(rng);
        }
        centres.push_back(vectors[next]);
    }
    return centres;
}

ClusteringResult lloyd(std::span<const Vector> vectors, std::vector<Vector> centres) {
    const std::size_t n = vectors.size(), k = centres.size(), dim = vectors.front().size();
    ClusteringResult r;
    r.k = k;
    r.assignments.assign(n, std::numeric_limits<std::size_t>::max());
    for (std::size_t it = 0; it < kKmeansMaxIterations; ++it) {
        bool changed = false;
        double inertia = 0.0;
        for (std::size_t i = 0; i < n; ++i) {
            std::size_t best = 0;
            double bd = std::numeric_limits<double>::infinity();
            for (std::size_t c = 0; c < k; ++c) {
                const double d = squared_distance(vectors[i], centres[c]);
                if (d < bd) {
                    bd = d;
                    best = c;
                }
            }
            inertia += bd;
            if (r.assignments[i] != best) {
                r.assignments[i] = best;
                changed = true;
            }
        }
        r.inertia_history.push_back(inertia);
        r.inertia = inertia;
        if (!changed) break;

        std::vector<Vector> sums(k, Vector(dim, 0.0));
        std::vector<std::size_t> counts(k, 0);
        for (std::size_t i = 0; i < n; ++i) {
            auto& s = sums[r.assignments[i]];
            for (std::size_t d = 0; d < dim; ++d) s[d] += vectors[i][d];
            ++counts[r.assignments[i]];
        }
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] == 0) continue;  // empty cluster keeps its centre
            for (std::size_t d = 0; d < dim; ++d) centres[c][d] = sums[c][d] / static_cast<double>(counts[c]);
        }
    }
    r.centroids = std::move(centres);
    return r;
}

}  // namespace

ClusteringResult kmeans(std::span<const Vector> vectors, std::size_t k, std::uint64_t seed, std::size_t restarts) {
    check_input(vectors);
    if (k == 0 || k > vectors.size()) throw ValidationError("k must lie in [1, number of vectors]");
    std::mt19937_64 rng(seed);
    ClusteringResult best;
    best.inertia = std::numeric_limits<double>::infinity();
    for (std::size_t s = 0; s < std::max<std::size_t>(restarts, 1); ++s) {
        auto r = lloyd(vectors, plus_plus_seeds(vectors, k, rng));
        if (r.inertia < best.inertia) best = std::move(r);
    }
    best.silhouette = silhouette_score(vectors, best.assignments);
    return best;
}

double silhouette_score(std::span<const Vector> vectors, std::span<const std::size_t> assignments) {
    check_input(vectors);
    if (assignments.size() != vectors.size()) throw DimensionError("one assignment per vector is required");
    const std::size_t k = *std::max_element(assignments.begin(), assignments.end()) + 1;
    std::vector<std::size_t> counts(k, 0);
    for (auto a : assignments) ++counts[a];
    if (std::count_if(counts.begin(), counts.end(), [](auto c) { return c > 0; }) < 2) return 0.0;

    double total = 0.0;
    std::vector<double> dist(k);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        std::fill(dist.begin(), dist.end(), 0.0);
        for (std::size_t j = 0; j < vectors.size(); ++j)
            if (j != i) dist[assignments[j]] += std::sqrt(squared_distance(vectors[i], vectors[j]));
        const std::size_t own = assignments[i];
        if (counts[own] <= 1) continue;  // singleton clusters score 0
        const double a = dist[own] / static_cast<double>(counts[own] - 1);
        double b = std::numeric_limits<double>::infinity();
        for (std::size_t c = 0; c < k; ++c)
            if (c != own && counts[c] > 0) b = std::min(b, dist[c] / static_cast<double>(counts[c]));
        const double m = std::max(a, b);
        if (m > 0.0) total += (b - a) / m;
    }
    return total / static_cast<double>(vectors.size());
}

KSelection select_k(std::span<const Vector> vectors, std::span<const std::size_t> k_range, std::uint64_t seed) {
    if (k_range.empty()) throw ValidationError("k range is empty");
    KSelection out;
    out.ks.assign(k_range.begin(), k_range.end());
    std::sort(out.ks.begin(), out.ks.end());
    out.ks.erase(std::unique(out.ks.begin(), out.ks.end()), out.ks.end());
    for (std::size_t k : out.ks) {
        const auto r = kmeans(vectors, k, seed);
        out.inertia.push_back(r.inertia);
        out.silhouette.push_back(r.silhouette);
    }

    // Kneedle-style elbow on the normalised curve.
    const std::size_t m = out.ks.size();
    std::size_t elbow = 0;
    if (m >= 3) {
        const double x0 = static_cast<double>(out.ks.front()), x1 = static_cast<double>(out.ks.back());
        const double y0 = out.inertia.front(), y1 = out.inertia.back();
        double best = -1.0;
        for (std::size_t i = 0; i < m; ++i) {
            const double x = (static_cast<double>(out.ks[i]) - x0) / (x1 - x0);
            const double y = y0 > y1 ? (out.inertia[i] - y1) / (y0 - y1) : 0.0;
            const double gap = (1.0 - x) - y;  // distance below the chord of a decreasing curve
            if (gap > best) {
                best = gap;
                elbow = i;
            }
        }
    }
    out.elbow = out.ks[elbow];

    const std::size_t lo = elbow >= 2 ? elbow - 2 : 0;
    const std::size_t hi = std::min(m - 1, elbow + 2);
    std::size_t pick = lo;
    for (std::size_t i = lo; i <= hi; ++i)
        if (out.silhouette[i] > out.silhouette[pick]) pick = i;
    out.chosen = out.silhouette[pick] < kMinimumSilhouette ? out.ks.front() : out.ks[pick];
    return out;
}

ClusteringResult merge_clusters(std::span<const Vector> vectors, const ClusteringResult& result,
                                const std::vector<std::vector<std::size_t>>& groups) {
    check_input(vectors);
    std::vector<std::size_t> target(result.k, std::numeric_limits<std::size_t>::max());
    for (std::size_t g = 0; g < groups.size(); ++g)
        for (std::size_t c : groups[g]) {
            if (c >= result.k || target[c] != std::numeric_limits<std::size_t>::max())
                throw ValidationError("merge groups must partition the clusters");
            target[c] = g;
        }
    for (auto t : target)
        if (t == std::numeric_limits<std::size_t>::max()) throw ValidationError("merge groups must cover every cluster");

    ClusteringResult out;
    out.k = groups.size();
    out.assignments.resize(vectors.size());
    const std::size_t dim = vectors.front().size();
    out.centroids.assign(out.k, Vector(dim, 0.0));
    std::vector<std::size_t> counts(out.k, 0);
    for (std::size_t i = 0; i < vectors.size(); ++i) {
        const std::size_t g = target.at(result.assignments.at(i));
        out.assignments[i] = g;
        ++counts[g];
        for (std::size_t d = 0; d < dim; ++d) out.centroids[g][d] += vectors[i][d];
    }
    for (std::size_t g = 0; g < out.k; ++g)
        if (counts[g] > 0)
            for (double& v : out.centroids[g]) v /= static_cast<double>(counts[g]);
    for (std::size_t i = 0; i < vectors.size(); ++i)
        out.inertia += squared_distance(vectors[i], out.centroids[out.assignments[i]]);
    out.silhouette = silhouette_score(vectors, out.assignments);
    return out;
}

}  // namespace p2p
