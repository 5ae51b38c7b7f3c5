#include "meal/clustering.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <utility>

#include "meal/random.hpp"

namespace meal {

double squared_distance(std::span<const double> a, std::span<const double> b) {
    double total = 0.0;
    for (std::size_t j = 0; j < a.size(); ++j) {
        const double d = a[j] - b[j];
        total += d * d;
    }
    return total;
}

double euclidean_distance(std::span<const double> a, std::span<const double> b) {
    return std::sqrt(squared_distance(a, b));
}

std::vector<std::vector<std::size_t>> knn(std::span<const std::size_t> query_rows,
                                          std::span<const std::size_t> base_rows,
                                          const Matrix& vectors, std::size_t k) {
    if (base_rows.empty()) throw Error(ErrorCode::precondition, "knn: empty base set");
    for (std::size_t r : base_rows) {
        if (r >= vectors.rows) throw Error(ErrorCode::invalid_argument, "knn: base row out of range");
    }

    std::vector<std::vector<std::size_t>> result;
    result.reserve(query_rows.size());
    std::vector<std::pair<double, std::size_t>> candidates;
    for (std::size_t q : query_rows) {
        if (q >= vectors.rows) throw Error(ErrorCode::invalid_argument, "knn: query row out of range");
        candidates.clear();
        for (std::size_t b : base_rows) {
            if (b == q) continue;
            candidates.emplace_back(squared_distance(vectors.row(q), vectors.row(b)), b);
        }
        if (k > candidates.size()) {
            throw Error(ErrorCode::precondition,
                        "knn: k=" + std::to_string(k) + " exceeds the " +
                            std::to_string(candidates.size()) + " available neighbours");
        }
        std::partial_sort(candidates.begin(), candidates.begin() + static_cast<std::ptrdiff_t>(k),
                          candidates.end());
        std::vector<std::size_t> neighbours(k);
        for (std::size_t m = 0; m < k; ++m) neighbours[m] = candidates[m].second;
        result.push_back(std::move(neighbours));
    }
    return result;
}

std::vector<std::size_t> kmeanspp_seed(const Matrix& vectors, std::size_t k,
                                       std::uint64_t seed) {
    const std::size_t n = vectors.rows;
    if (k > n) {
        throw Error(ErrorCode::precondition, "kmeans++: k=" + std::to_string(k) +
                                                 " exceeds N=" + std::to_string(n));
    }
    std::vector<std::size_t> chosen;
    if (k == 0) return chosen;
    chosen.reserve(k);

    Pcg64 rng(seed);
    std::vector<bool> taken(n, false);
    std::vector<double> nearest(n, std::numeric_limits<double>::infinity());

    auto take = [&](std::size_t idx) {
        chosen.push_back(idx);
        taken[idx] = true;
        for (std::size_t i = 0; i < n; ++i) {
            nearest[i] = taken[i] ? 0.0
                                  : std::min(nearest[i],
                                             squared_distance(vectors.row(i), vectors.row(idx)));
        }
    };

    take(static_cast<std::size_t>(rng.below(n)));
    while (chosen.size() < k) {
        double total = 0.0;
        for (std::size_t i = 0; i < n; ++i) total += nearest[i];

        if (total <= 0.0) {
            std::vector<std::size_t> free_rows;
            for (std::size_t i = 0; i < n; ++i) {
                if (!taken[i]) free_rows.push_back(i);
            }
            take(free_rows[static_cast<std::size_t>(rng.below(free_rows.size()))]);
            continue;
        }

        const double target = rng.uniform01() * total;
        double cumulative = 0.0;
        std::size_t pick = n;
        std::size_t last_positive = n;
        for (std::size_t i = 0; i < n; ++i) {
            if (nearest[i] <= 0.0) continue;
            last_positive = i;
            cumulative += nearest[i];
            if (target < cumulative) {
                pick = i;
                break;
            }
        }
        take(pick < n ? pick : last_positive);
    }
    return chosen;
}

namespace {

// Assigns each point to its nearest center. On exact ties a point keeps its
// current cluster, otherwise the lowest center index wins.
void assign_nearest(const Matrix& vectors, const Matrix& centers,
                    std::vector<std::size_t>& assignments) {
    const std::size_t k = centers.rows;
    for (std::size_t i = 0; i < vectors.rows; ++i) {
        std::size_t best = assignments[i] < k ? assignments[i] : 0;
        double best_d = squared_distance(vectors.row(i), centers.row(best));
        for (std::size_t c = 0; c < k; ++c) {
            const double d = squared_distance(vectors.row(i), centers.row(c));
            if (d < best_d) {
                best_d = d;
                best = c;
            }
        }
        assignments[i] = best;
    }
}

std::vector<std::size_t> cluster_sizes(const std::vector<std::size_t>& assignments,
                                       std::size_t k) {
    std::vector<std::size_t> counts(k, 0);
    for (std::size_t a : assignments) ++counts[a];
    return counts;
}

// Moves the point farthest from its center into each empty cluster, then
// reassigns. Repeats while clusters remain empty, at most k rounds.
void repair_empty(const Matrix& vectors, Matrix& centers,
                  std::vector<std::size_t>& assignments) {
    const std::size_t k = centers.rows;
    for (std::size_t round = 0; round < k; ++round) {
        std::vector<std::size_t> counts = cluster_sizes(assignments, k);
        if (std::find(counts.begin(), counts.end(), 0) == counts.end()) return;
        for (std::size_t c = 0; c < k; ++c) {
            if (counts[c] != 0) continue;
            std::size_t far = vectors.rows;
            double far_d = -1.0;
            for (std::size_t i = 0; i < vectors.rows; ++i) {
                if (counts[assignments[i]] < 2) continue;
                const double d =
                    squared_distance(vectors.row(i), centers.row(assignments[i]));
                if (d > far_d) {
                    far_d = d;
                    far = i;
                }
            }
            if (far == vectors.rows) return;
            std::copy_n(vectors.row(far).begin(), vectors.cols, centers.row(c).begin());
            --counts[assignments[far]];
            assignments[far] = c;
            counts[c] = 1;
        }
        assign_nearest(vectors, centers, assignments);
    }
}

double total_inertia(const Matrix& vectors, const Matrix& centers,
                     const std::vector<std::size_t>& assignments) {
    double total = 0.0;
    for (std::size_t i = 0; i < vectors.rows; ++i) {
        total += squared_distance(vectors.row(i), centers.row(assignments[i]));
    }
    return total;
}

void update_means(const Matrix& vectors, Matrix& centers,
                  const std::vector<std::size_t>& assignments) {
    Matrix sums(centers.rows, centers.cols, 0.0);
    std::vector<std::size_t> counts(centers.rows, 0);
    for (std::size_t i = 0; i < vectors.rows; ++i) {
        auto dst = sums.row(assignments[i]);
        auto src = vectors.row(i);
        for (std::size_t j = 0; j < vectors.cols; ++j) dst[j] += src[j];
        ++counts[assignments[i]];
    }
    for (std::size_t c = 0; c < centers.rows; ++c) {
        if (counts[c] == 0) continue;
        const auto denom = static_cast<double>(counts[c]);
        for (std::size_t j = 0; j < centers.cols; ++j) {
            centers.at(c, j) = sums.at(c, j) / denom;
        }
    }
}

}  // namespace

KMeansResult kmeans(const Matrix& vectors, std::size_t k, std::uint64_t seed,
                    const KMeansOptions& options) {
    if (k == 0) throw Error(ErrorCode::invalid_argument, "kmeans: k must be >= 1");
    if (k > vectors.rows) {
        throw Error(ErrorCode::precondition, "kmeans: k=" + std::to_string(k) +
                                                 " exceeds N=" + std::to_string(vectors.rows));
    }
    if (options.max_iterations == 0) {
        throw Error(ErrorCode::invalid_argument, "kmeans: max_iterations must be >= 1");
    }

    KMeansResult result;
    result.centers = Matrix(k, vectors.cols);
    const std::vector<std::size_t> seeds = kmeanspp_seed(vectors, k, seed);
    for (std::size_t c = 0; c < k; ++c) {
        std::copy_n(vectors.row(seeds[c]).begin(), vectors.cols, result.centers.row(c).begin());
    }

    result.assignments.assign(vectors.rows, k);
    for (std::size_t it = 0; it < options.max_iterations; ++it) {
        assign_nearest(vectors, result.centers, result.assignments);
        repair_empty(vectors, result.centers, result.assignments);
        const double inertia = total_inertia(vectors, result.centers, result.assignments);
        result.inertia_history.push_back(inertia);
        result.inertia = inertia;
        result.iterations_run = it + 1;

        if (it > 0) {
            const double previous = result.inertia_history[it - 1];
            if (previous - inertia <= options.relative_tolerance * previous) break;
        }
        if (it + 1 == options.max_iterations) break;
        update_means(vectors, result.centers, result.assignments);
    }
    return result;
}

}  // namespace meal
