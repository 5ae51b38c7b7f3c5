#pragma once

#include <cstddef>
#include <vector>

#include "meal/core.hpp"

namespace meal {

enum class Direction { select_highest, select_lowest };

struct ScoreVector {
    std::vector<double> values;
    Direction direction = Direction::select_highest;
};

/// Sum over prompts of the Shannon entropy of each prompt's distribution.
ScoreVector entropy_scores(const ProbTensor& probs);

/// Sum over prompts of the gap between the two most probable labels.
/// Top-two ties resolve to the smaller label index.
ScoreVector breaking_ties_scores(const ProbTensor& probs);

/// Sum over prompts of the predicted-class probability; lowest is selected.
ScoreVector lowest_confidence_scores(const ProbTensor& probs);

/// Inter-prompt disagreement: KL summed over every ordered prompt pair.
double ppkl_score(const ProbTensor& probs, std::size_t example);
ScoreVector ppkl_scores(const ProbTensor& probs);

inline constexpr std::size_t default_cal_neighbors = 10;

/// Contrastive score: KL from each of the M nearest embedding neighbours'
/// prompt distributions to the example's own, summed over prompts.
ScoreVector cal_scores(const PoolDataset& pool, const ProbTensor& probs,
                       std::size_t m_neighbors = default_cal_neighbors);

}  // namespace meal
