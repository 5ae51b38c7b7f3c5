#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "meal/core.hpp"

namespace meal {

double squared_distance(std::span<const double> a, std::span<const double> b);
double euclidean_distance(std::span<const double> a, std::span<const double> b);

/// For each query row, the `k` rows of `base_rows` closest in Euclidean
/// distance, nearest first; ties go to the smaller index. A query never
/// appears in its own result even when it is part of `base_rows`.
std::vector<std::vector<std::size_t>> knn(std::span<const std::size_t> query_rows,
                                          std::span<const std::size_t> base_rows,
                                          const Matrix& vectors, std::size_t k);

/// k-means++ (D^2) seeding. The first index is uniform; later indices are
/// drawn proportionally to the squared distance to the nearest chosen seed,
/// falling back to uniform over unchosen rows once every distance is zero.
std::vector<std::size_t> kmeanspp_seed(const Matrix& vectors, std::size_t k,
                                       std::uint64_t seed);

struct KMeansResult {
    Matrix centers;
    std::vector<std::size_t> assignments;
    double inertia = 0.0;
    std::size_t iterations_run = 0;
    /// Inertia after every assignment step, in order.
    std::vector<double> inertia_history;
};

struct KMeansOptions {
    std::size_t max_iterations = 100;
    double relative_tolerance = 1e-6;
};

/// Lloyd's algorithm from a k-means++ start. Empty clusters are refilled with
/// the point farthest from its current center, so every cluster in the
/// result is non-empty whenever the data has at least k distinct rows.
KMeansResult kmeans(const Matrix& vectors, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options = {});

}  // namespace meal
