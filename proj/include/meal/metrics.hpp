#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "meal/core.hpp"

namespace meal {

/// Means below this are clamped before taking reciprocals, so degenerate
/// geometry saturates at 1 / metric_floor instead of dividing by zero.
inline constexpr double metric_floor = 1e-9;
inline constexpr std::size_t default_representativeness_k = 10;

/// Reciprocal of the mean distance from every unselected example to its
/// nearest selected example (embedding space, Euclidean).
double diversity(const PoolDataset& pool, const Selection& selection);

/// Reciprocal of the mean, over selected examples, of the mean distance to
/// their k nearest unselected examples.
double representativeness(const PoolDataset& pool, const Selection& selection,
                          std::size_t k = default_representativeness_k);

enum class LabelSmoothing { none, add_one };

/// KL(pool class distribution || selection class distribution) in nats.
/// With add_one the selection distribution is (count + 1) / (budget + L).
double label_entropy(const PoolDataset& pool, const Selection& selection,
                     LabelSmoothing smoothing = LabelSmoothing::add_one);

struct MetricsReport {
    Algorithm algorithm = Algorithm::random;
    std::uint64_t seed = 0;
    std::size_t budget = 0;
    double diversity = 0.0;
    double representativeness = 0.0;
    /// Smoothed label entropy in nats; empty when the pool has no gold labels.
    std::optional<double> label_entropy;

    std::optional<double> label_entropy_x100() const {
        if (!label_entropy) return std::nullopt;
        return *label_entropy * 100.0;
    }
};

MetricsReport evaluate_selection(const PoolDataset& pool, const Selection& selection,
                                 std::size_t representativeness_k = default_representativeness_k);

struct MetricSummary {
    double mean = 0.0;
    /// Sample standard deviation; empty for a single observation.
    std::optional<double> stdev;
};

MetricSummary summarize(std::span<const double> values);

enum class TiePolicy {
    /// Tied entries all take the best rank of the tie ("1224").
    competition,
    /// Tied entries share the mean of the ranks they span ("1 2.5 2.5 4").
    mean,
};

/// values[d][a] is the score of algorithm a on dataset d.
struct RankTable {
    std::vector<std::string> algorithms;
    std::vector<std::string> datasets;
    std::vector<std::vector<std::optional<double>>> values;
    bool higher_is_better = true;
};

/// Ranks the algorithms within each dataset (1 = best) and averages the
/// ranks across datasets. Throws precondition on any missing entry.
std::vector<double> rank_algorithms(const RankTable& table,
                                    TiePolicy ties = TiePolicy::competition);

}  // namespace meal
