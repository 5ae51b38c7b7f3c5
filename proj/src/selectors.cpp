#include "meal/selectors.hpp"

#include <algorithm>
#include <numeric>
#include <thread>

#include "meal/random.hpp"

namespace meal {
namespace {

// Stream tags: every (algorithm, seed) pair gets its own generator, and
// IPUSD splits its stream between clustering and per-iteration sampling.
constexpr std::uint64_t kClusteringStream = 0x6b6d65616e73ULL;
constexpr std::uint64_t kIterationStream = 0x6974657273ULL;

std::uint64_t algorithm_seed(Algorithm algo, std::uint64_t seed) {
    return derive_seed(seed, static_cast<std::uint64_t>(algo) + 1);
}

struct Candidate {
    double score = 0.0;
    std::size_t iteration = 0;
    bool valid = false;

    bool beats(const Candidate& other) const {
        if (!other.valid) return valid;
        if (!valid) return false;
        if (score != other.score) return score > other.score;
        return iteration < other.iteration;
    }
};

}  // namespace

std::size_t resolve_budget(const PoolDataset& pool, const SelectorConfig& cfg) {
    const std::size_t budget = cfg.budget.value_or(default_budget(pool.num_labels));
    if (budget > pool.n) {
        throw Error(ErrorCode::precondition, "budget " + std::to_string(budget) +
                                                 " exceeds pool size " + std::to_string(pool.n));
    }
    return budget;
}

Selection select_random(const PoolDataset& pool, const SelectorConfig& cfg) {
    const std::size_t budget = resolve_budget(pool, cfg);
    Pcg64 rng(algorithm_seed(Algorithm::random, cfg.seed));
    return Selection{sample_without_replacement(pool.n, budget, rng), Algorithm::random,
                     cfg.seed, std::nullopt};
}

Selection select_topk(const ScoreVector& scores, std::size_t budget, Algorithm algorithm) {
    const std::size_t n = scores.values.size();
    if (budget > n) {
        throw Error(ErrorCode::precondition, "budget " + std::to_string(budget) +
                                                 " exceeds pool size " + std::to_string(n));
    }
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    const bool highest = scores.direction == Direction::select_highest;
    auto more_extreme = [&](std::size_t a, std::size_t b) {
        const double sa = scores.values[a];
        const double sb = scores.values[b];
        if (sa != sb) return highest ? sa > sb : sa < sb;
        return a < b;
    };
    std::partial_sort(order.begin(), order.begin() + static_cast<std::ptrdiff_t>(budget),
                      order.end(), more_extreme);
    order.resize(budget);
    return Selection{std::move(order), algorithm, 0, std::nullopt};
}

Matrix badge_embeddings(const PoolDataset& pool, const ProbTensor& probs,
                        bool allow_fallback) {
    if (!pool.hidden_states && !allow_fallback) {
        throw Error(ErrorCode::precondition, "badge: pool has no hidden states");
    }
    const std::size_t prompts = pool.num_prompts;
    const std::size_t labels = pool.num_labels;
    const std::size_t hidden =
        pool.hidden_states ? pool.hidden_states->dim2 : pool.embeddings.cols;
    const std::size_t block = labels * hidden;

    Matrix out(pool.n, prompts * block);
    for (std::size_t i = 0; i < pool.n; ++i) {
        for (std::size_t p = 0; p < prompts; ++p) {
            const auto prob = probs.row(i, p);
            const std::span<const double> h =
                pool.hidden_states ? pool.hidden_states->row(i, p) : pool.embeddings.row(i);
            std::size_t predicted = 0;
            for (std::size_t j = 1; j < labels; ++j) {
                if (prob[j] > prob[predicted]) predicted = j;
            }
            double* dst = out.row(i).data() + p * block;
            for (std::size_t j = 0; j < labels; ++j) {
                const double residual = prob[j] - (j == predicted ? 1.0 : 0.0);
                for (std::size_t k = 0; k < hidden; ++k) dst[j * hidden + k] = residual * h[k];
            }
        }
    }
    return out;
}

Selection select_badge(const PoolDataset& pool, const ProbTensor& probs,
                       const SelectorConfig& cfg) {
    const std::size_t budget = resolve_budget(pool, cfg);
    const Matrix grads = badge_embeddings(pool, probs, cfg.badge_embedding_fallback);
    return Selection{kmeanspp_seed(grads, budget, algorithm_seed(Algorithm::badge, cfg.seed)),
                     Algorithm::badge, cfg.seed, std::nullopt};
}

Matrix ipusd_representation(const PoolDataset& pool) {
    const std::size_t width = pool.num_prompts * pool.num_labels;
    Matrix out(pool.n, width);
    for (std::size_t i = 0; i < pool.n; ++i) {
        std::copy_n(pool.logits.data.begin() + static_cast<std::ptrdiff_t>(i * width), width,
                    out.row(i).begin());
    }
    return out;
}

std::vector<std::size_t> cluster_quotas(const std::vector<std::size_t>& cluster_sizes,
                                        std::size_t budget) {
    const std::size_t k = cluster_sizes.size();
    if (k == 0) throw Error(ErrorCode::invalid_argument, "cluster_quotas: no clusters");
    const std::size_t available =
        std::accumulate(cluster_sizes.begin(), cluster_sizes.end(), std::size_t{0});
    if (budget > available) {
        throw Error(ErrorCode::precondition, "cluster_quotas: budget exceeds cluster members");
    }

    std::vector<std::size_t> order(k);
    std::iota(order.begin(), order.end(), std::size_t{0});
    std::stable_sort(order.begin(), order.end(), [&](std::size_t a, std::size_t b) {
        return cluster_sizes[a] > cluster_sizes[b];
    });

    std::vector<std::size_t> quotas(k, budget / k);
    for (std::size_t r = 0; r < budget % k; ++r) ++quotas[order[r]];

    std::size_t deficit = 0;
    for (std::size_t c = 0; c < k; ++c) {
        if (quotas[c] > cluster_sizes[c]) {
            deficit += quotas[c] - cluster_sizes[c];
            quotas[c] = cluster_sizes[c];
        }
    }
    for (std::size_t pos = 0; deficit > 0; pos = (pos + 1) % k) {
        const std::size_t c = order[pos];
        if (quotas[c] < cluster_sizes[c]) {
            ++quotas[c];
            --deficit;
        }
    }
    return quotas;
}

std::vector<std::size_t> ipusd_candidate(const std::vector<std::vector<std::size_t>>& members,
                                         const std::vector<std::size_t>& quotas,
                                         std::uint64_t seed, std::size_t iteration) {
    Pcg64 rng(derive_seed(seed, iteration));
    std::vector<std::size_t> chosen;
    for (std::size_t c = 0; c < members.size(); ++c) {
        for (std::size_t slot : sample_without_replacement(members[c].size(), quotas[c], rng)) {
            chosen.push_back(members[c][slot]);
        }
    }
    std::sort(chosen.begin(), chosen.end());
    return chosen;
}

IpusdResult run_ipusd(const PoolDataset& pool, const ProbTensor& probs,
                      const SelectorConfig& cfg) {
    const std::size_t budget = resolve_budget(pool, cfg);
    if (cfg.ipusd_clusters < 1 || cfg.ipusd_iterations < 1) {
        throw Error(ErrorCode::invalid_argument, "ipusd: clusters and iterations must be >= 1");
    }
    const std::uint64_t base = algorithm_seed(Algorithm::ipusd, cfg.seed);
    const std::uint64_t iteration_seed = derive_seed(base, kIterationStream);

    IpusdResult result;
    const std::size_t k = std::min(cfg.ipusd_clusters, pool.n);
    result.clustering = kmeans(ipusd_representation(pool), k, derive_seed(base, kClusteringStream));

    std::vector<std::vector<std::size_t>> members(k);
    for (std::size_t i = 0; i < pool.n; ++i) members[result.clustering.assignments[i]].push_back(i);
    std::vector<std::size_t> sizes(k);
    for (std::size_t c = 0; c < k; ++c) sizes[c] = members[c].size();
    result.quotas = cluster_quotas(sizes, budget);

    const std::vector<double> uncertainty = ppkl_scores(probs).values;
    auto evaluate = [&](std::size_t iter) {
        double score = 0.0;
        for (std::size_t idx : ipusd_candidate(members, result.quotas, iteration_seed, iter)) {
            score += uncertainty[idx];
        }
        return Candidate{score, iter, true};
    };

    std::size_t workers = cfg.threads == 0 ? std::thread::hardware_concurrency() : cfg.threads;
    workers = std::clamp<std::size_t>(workers, 1, cfg.ipusd_iterations);
    std::vector<Candidate> best(workers);
    auto worker = [&](std::size_t w) {
        for (std::size_t iter = w; iter < cfg.ipusd_iterations; iter += workers) {
            const Candidate c = evaluate(iter);
            if (c.beats(best[w])) best[w] = c;
        }
    };
    if (workers == 1) {
        worker(0);
    } else {
        std::vector<std::jthread> pool_threads;
        pool_threads.reserve(workers);
        for (std::size_t w = 0; w < workers; ++w) pool_threads.emplace_back(worker, w);
    }

    Candidate winner;
    for (const Candidate& c : best) {
        if (c.beats(winner)) winner = c;
    }
    result.winning_iteration = winner.iteration;
    result.selection = Selection{
        ipusd_candidate(members, result.quotas, iteration_seed, winner.iteration),
        Algorithm::ipusd, cfg.seed, winner.score};
    return result;
}

Selection select_ipusd(const PoolDataset& pool, const ProbTensor& probs,
                       const SelectorConfig& cfg) {
    return run_ipusd(pool, probs, cfg).selection;
}

Selection select(const PoolDataset& pool, Algorithm algorithm, const SelectorConfig& cfg) {
    validate_pool(pool);
    const std::size_t budget = resolve_budget(pool, cfg);
    switch (algorithm) {
        case Algorithm::random: return select_random(pool, cfg);
        case Algorithm::badge: return select_badge(pool, softmax_probs(pool), cfg);
        case Algorithm::ipusd: return select_ipusd(pool, softmax_probs(pool), cfg);
        default: break;
    }
    const ProbTensor probs = softmax_probs(pool);
    switch (algorithm) {
        case Algorithm::entropy: return select_topk(entropy_scores(probs), budget, algorithm);
        case Algorithm::lc: return select_topk(lowest_confidence_scores(probs), budget, algorithm);
        case Algorithm::bt: return select_topk(breaking_ties_scores(probs), budget, algorithm);
        case Algorithm::ppkl: return select_topk(ppkl_scores(probs), budget, algorithm);
        case Algorithm::cal:
            return select_topk(cal_scores(pool, probs, cfg.cal_m), budget, algorithm);
        default: break;
    }
    throw Error(ErrorCode::invalid_argument, "unsupported algorithm");
}

}  // namespace meal
