#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "meal/clustering.hpp"
#include "meal/core.hpp"
#include "meal/scoring.hpp"

namespace meal {

struct SelectorConfig {
    /// Selection size; unset means 16 * num_labels.
    std::optional<std::size_t> budget;
    std::uint64_t seed = 0;
    std::size_t ipusd_clusters = 8;
    std::size_t ipusd_iterations = 1000;
    std::size_t cal_m = default_cal_neighbors;
    /// Worker threads for IPUSD iterations; 0 means hardware concurrency.
    /// Results do not depend on this value.
    std::size_t threads = 1;
    /// Use the pool embeddings as every prompt's hidden state when the pool
    /// carries no hidden states.
    bool badge_embedding_fallback = true;
};

inline std::size_t default_budget(std::size_t num_labels) { return 16 * num_labels; }

/// Budget after applying the default; throws precondition when it exceeds N.
std::size_t resolve_budget(const PoolDataset& pool, const SelectorConfig& cfg);

Selection select_random(const PoolDataset& pool, const SelectorConfig& cfg);

/// The `budget` most extreme scores in `scores.direction`, most extreme
/// first; equal scores are ordered by index.
Selection select_topk(const ScoreVector& scores, std::size_t budget, Algorithm algorithm);

/// Last-layer cross-entropy gradients, conditioned on the predicted label,
/// concatenated over prompts. Row i has P blocks of L*H entries; within a
/// block entry (j, h) sits at j*H + h and equals (p_j - [j == argmax]) * h.
Matrix badge_embeddings(const PoolDataset& pool, const ProbTensor& probs,
                        bool allow_fallback = true);

Selection select_badge(const PoolDataset& pool, const ProbTensor& probs,
                       const SelectorConfig& cfg);

/// Raw logits concatenated over prompts, N x (P*L).
Matrix ipusd_representation(const PoolDataset& pool);

/// Per-cluster sample sizes for a budget spread evenly over clusters.
/// Remainders go one each to the largest clusters; clusters that are too
/// small hand their deficit round-robin to clusters with spare members.
std::vector<std::size_t> cluster_quotas(const std::vector<std::size_t>& cluster_sizes,
                                        std::size_t budget);

struct IpusdResult {
    Selection selection;
    KMeansResult clustering;
    std::vector<std::size_t> quotas;
    /// 0-based iteration that produced the winning set.
    std::size_t winning_iteration = 0;
};

/// Candidate set drawn at a given 0-based iteration, sorted ascending. Each
/// iteration uses its own PRNG stream derived from (seed, iteration).
std::vector<std::size_t> ipusd_candidate(const std::vector<std::vector<std::size_t>>& members,
                                         const std::vector<std::size_t>& quotas,
                                         std::uint64_t seed, std::size_t iteration);

IpusdResult run_ipusd(const PoolDataset& pool, const ProbTensor& probs,
                      const SelectorConfig& cfg);

Selection select_ipusd(const PoolDataset& pool, const ProbTensor& probs,
                       const SelectorConfig& cfg);

/// Dispatches to the selector for `algorithm`. Deterministic algorithms
/// record seed 0.
Selection select(const PoolDataset& pool, Algorithm algorithm, const SelectorConfig& cfg);

}  // namespace meal
