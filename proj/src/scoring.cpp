#include "meal/scoring.hpp"

#include <numeric>

#include "meal/clustering.hpp"

namespace meal {

ScoreVector entropy_scores(const ProbTensor& probs) {
    ScoreVector out{std::vector<double>(probs.n(), 0.0), Direction::select_highest};
    for (std::size_t i = 0; i < probs.n(); ++i) {
        for (std::size_t p = 0; p < probs.num_prompts(); ++p) {
            out.values[i] += shannon_entropy(probs.row(i, p));
        }
    }
    return out;
}

ScoreVector breaking_ties_scores(const ProbTensor& probs) {
    if (probs.num_labels() < 2) {
        throw Error(ErrorCode::precondition, "breaking ties needs at least two labels");
    }
    ScoreVector out{std::vector<double>(probs.n(), 0.0), Direction::select_lowest};
    for (std::size_t i = 0; i < probs.n(); ++i) {
        for (std::size_t p = 0; p < probs.num_prompts(); ++p) {
            const auto row = probs.row(i, p);
            std::size_t first = 0;
            for (std::size_t j = 1; j < row.size(); ++j) {
                if (row[j] > row[first]) first = j;
            }
            std::size_t second = first == 0 ? 1 : 0;
            for (std::size_t j = 0; j < row.size(); ++j) {
                if (j != first && row[j] > row[second]) second = j;
            }
            out.values[i] += row[first] - row[second];
        }
    }
    return out;
}

ScoreVector lowest_confidence_scores(const ProbTensor& probs) {
    ScoreVector out{std::vector<double>(probs.n(), 0.0), Direction::select_lowest};
    for (std::size_t i = 0; i < probs.n(); ++i) {
        for (std::size_t p = 0; p < probs.num_prompts(); ++p) {
            const auto row = probs.row(i, p);
            double peak = row[0];
            for (double v : row) peak = v > peak ? v : peak;
            out.values[i] += peak;
        }
    }
    return out;
}

double ppkl_score(const ProbTensor& probs, std::size_t example) {
    double total = 0.0;
    for (std::size_t p = 0; p < probs.num_prompts(); ++p) {
        for (std::size_t q = 0; q < probs.num_prompts(); ++q) {
            total += kl_divergence(probs.row(example, p), probs.row(example, q));
        }
    }
    return total;
}

ScoreVector ppkl_scores(const ProbTensor& probs) {
    ScoreVector out{std::vector<double>(probs.n(), 0.0), Direction::select_highest};
    for (std::size_t i = 0; i < probs.n(); ++i) out.values[i] = ppkl_score(probs, i);
    return out;
}

ScoreVector cal_scores(const PoolDataset& pool, const ProbTensor& probs,
                       std::size_t m_neighbors) {
    if (m_neighbors >= pool.n) {
        throw Error(ErrorCode::precondition,
                    "cal: M=" + std::to_string(m_neighbors) +
                        " must be smaller than N=" + std::to_string(pool.n));
    }
    if (probs.n() != pool.n || probs.num_prompts() != pool.num_prompts) {
        throw Error(ErrorCode::dimension_mismatch, "cal: probabilities do not match the pool");
    }
    std::vector<std::size_t> rows(pool.n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    const auto neighbours = knn(rows, rows, pool.embeddings, m_neighbors);

    ScoreVector out{std::vector<double>(pool.n, 0.0), Direction::select_highest};
    for (std::size_t i = 0; i < pool.n; ++i) {
        for (std::size_t m : neighbours[i]) {
            for (std::size_t p = 0; p < pool.num_prompts; ++p) {
                out.values[i] += kl_divergence(probs.row(m, p), probs.row(i, p));
            }
        }
    }
    return out;
}

}  // namespace meal
