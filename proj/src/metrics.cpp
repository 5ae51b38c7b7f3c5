#include "meal/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

#include "meal/clustering.hpp"

namespace meal {
namespace {

std::vector<std::size_t> unselected_rows(const PoolDataset& pool, const Selection& selection) {
    std::vector<bool> chosen(pool.n, false);
    for (std::size_t idx : selection.indices) chosen[idx] = true;
    std::vector<std::size_t> rest;
    for (std::size_t i = 0; i < pool.n; ++i) {
        if (!chosen[i]) rest.push_back(i);
    }
    return rest;
}

void check_selection(const PoolDataset& pool, const Selection& selection) {
    validate_selection(selection, pool.n);
    if (selection.indices.empty()) {
        throw Error(ErrorCode::precondition, "metrics need a non-empty selection");
    }
}

double reciprocal_floored(double mean) { return 1.0 / std::max(mean, metric_floor); }

}  // namespace

double diversity(const PoolDataset& pool, const Selection& selection) {
    check_selection(pool, selection);
    const std::vector<std::size_t> rest = unselected_rows(pool, selection);
    if (rest.empty()) {
        throw Error(ErrorCode::precondition, "diversity: selection covers the whole pool");
    }
    double total = 0.0;
    for (std::size_t u : rest) {
        double nearest = std::numeric_limits<double>::infinity();
        for (std::size_t t : selection.indices) {
            nearest = std::min(nearest, squared_distance(pool.embeddings.row(u),
                                                         pool.embeddings.row(t)));
        }
        total += std::sqrt(nearest);
    }
    return reciprocal_floored(total / static_cast<double>(rest.size()));
}

double representativeness(const PoolDataset& pool, const Selection& selection, std::size_t k) {
    check_selection(pool, selection);
    if (k == 0) throw Error(ErrorCode::invalid_argument, "representativeness: k must be >= 1");
    const std::vector<std::size_t> rest = unselected_rows(pool, selection);
    if (rest.size() < k) {
        throw Error(ErrorCode::precondition,
                    "representativeness: only " + std::to_string(rest.size()) +
                        " unselected examples for k=" + std::to_string(k));
    }
    const auto neighbours = knn(selection.indices, rest, pool.embeddings, k);
    double total = 0.0;
    for (std::size_t s = 0; s < selection.indices.size(); ++s) {
        double per_example = 0.0;
        for (std::size_t u : neighbours[s]) {
            per_example += euclidean_distance(pool.embeddings.row(selection.indices[s]),
                                              pool.embeddings.row(u));
        }
        total += per_example / static_cast<double>(k);
    }
    return reciprocal_floored(total / static_cast<double>(selection.indices.size()));
}

double label_entropy(const PoolDataset& pool, const Selection& selection,
                     LabelSmoothing smoothing) {
    if (!pool.gold_labels) {
        throw Error(ErrorCode::precondition, "label entropy needs gold labels");
    }
    check_selection(pool, selection);
    const std::size_t labels = pool.num_labels;
    const auto& gold = *pool.gold_labels;

    std::vector<double> pool_dist(labels, 0.0);
    for (std::int64_t y : gold) pool_dist[static_cast<std::size_t>(y)] += 1.0;
    for (double& v : pool_dist) v /= static_cast<double>(gold.size());

    std::vector<double> sel_dist(labels, 0.0);
    for (std::size_t idx : selection.indices) sel_dist[static_cast<std::size_t>(gold[idx])] += 1.0;
    const auto budget = static_cast<double>(selection.indices.size());
    for (double& v : sel_dist) {
        v = smoothing == LabelSmoothing::add_one ? (v + 1.0) / (budget + static_cast<double>(labels))
                                                 : v / budget;
    }
    return kl_divergence(pool_dist, sel_dist);
}

MetricsReport evaluate_selection(const PoolDataset& pool, const Selection& selection,
                                 std::size_t representativeness_k) {
    MetricsReport report;
    report.algorithm = selection.algorithm;
    report.seed = selection.seed;
    report.budget = selection.indices.size();
    report.diversity = diversity(pool, selection);
    report.representativeness = representativeness(pool, selection, representativeness_k);
    if (pool.gold_labels) report.label_entropy = label_entropy(pool, selection);
    return report;
}

MetricSummary summarize(std::span<const double> values) {
    if (values.empty()) throw Error(ErrorCode::invalid_argument, "summarize: no values");
    MetricSummary out;
    for (double v : values) out.mean += v;
    out.mean /= static_cast<double>(values.size());
    if (values.size() > 1) {
        double ss = 0.0;
        for (double v : values) ss += (v - out.mean) * (v - out.mean);
        out.stdev = std::sqrt(ss / static_cast<double>(values.size() - 1));
    }
    return out;
}

std::vector<double> rank_algorithms(const RankTable& table, TiePolicy ties) {
    const std::size_t algos = table.algorithms.size();
    if (algos == 0 || table.datasets.empty()) {
        throw Error(ErrorCode::invalid_argument, "rank_algorithms: empty table");
    }
    if (table.values.size() != table.datasets.size()) {
        throw Error(ErrorCode::dimension_mismatch, "rank_algorithms: one row per dataset expected");
    }

    std::vector<double> totals(algos, 0.0);
    for (std::size_t d = 0; d < table.datasets.size(); ++d) {
        const auto& row = table.values[d];
        if (row.size() != algos) {
            throw Error(ErrorCode::dimension_mismatch,
                        "rank_algorithms: dataset '" + table.datasets[d] + "' has wrong width");
        }
        std::vector<double> scores(algos);
        for (std::size_t a = 0; a < algos; ++a) {
            if (!row[a]) {
                throw Error(ErrorCode::precondition, "rank_algorithms: missing entry for '" +
                                                         table.algorithms[a] + "' on '" +
                                                         table.datasets[d] + "'");
            }
            scores[a] = table.higher_is_better ? -*row[a] : *row[a];
        }
        std::vector<std::size_t> order(algos);
        std::iota(order.begin(), order.end(), std::size_t{0});
        std::stable_sort(order.begin(), order.end(),
                         [&](std::size_t x, std::size_t y) { return scores[x] < scores[y]; });

        for (std::size_t start = 0; start < algos;) {
            std::size_t end = start + 1;
            while (end < algos && scores[order[end]] == scores[order[start]]) ++end;
            const double rank = ties == TiePolicy::competition
                                    ? static_cast<double>(start + 1)
                                    : static_cast<double>(start + 1 + end) / 2.0;
            for (std::size_t pos = start; pos < end; ++pos) totals[order[pos]] += rank;
            start = end;
        }
    }
    for (double& t : totals) t /= static_cast<double>(table.datasets.size());
    return totals;
}

}  // namespace meal
