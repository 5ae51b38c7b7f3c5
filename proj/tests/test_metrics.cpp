#include <cmath>
#include <functional>
#include <random>

#include <doctest.h>

#include "meal/metrics.hpp"
#include "meal/random.hpp"
#include "oracles.hpp"

using namespace meal;

namespace {

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected meal::Error");
    return ErrorCode::io_failure;
}

PoolDataset line_pool(const std::vector<double>& xs) {
    Matrix emb(xs.size(), 1);
    emb.data = xs;
    return make_pool(Tensor3(xs.size(), 1, 2, 0.0), emb);
}

Selection pick(std::vector<std::size_t> idx) { return Selection{std::move(idx), Algorithm::random, 0, {}}; }

}  // namespace

TEST_CASE("diversity closed forms") {
    const PoolDataset pool = line_pool({0.0, 2.0, -2.0, 2.0});
    CHECK(diversity(pool, pick({0})) == 0.5);
    const PoolDataset with_dup = line_pool({0.0, 2.0, 0.0, 2.0});
    CHECK(diversity(with_dup, pick({0})) > diversity(pool, pick({0})));
    CHECK(code_of([&] { (void)diversity(pool, pick({0, 1, 2, 3})); }) == ErrorCode::precondition);
    CHECK(code_of([&] { (void)diversity(pool, pick({})); }) == ErrorCode::precondition);
    CHECK(code_of([&] { (void)diversity(pool, pick({0, 0})); }) == ErrorCode::invalid_argument);
}

TEST_CASE("representativeness closed forms") {
    const PoolDataset same = line_pool(std::vector<double>(12, 3.0));
    CHECK(representativeness(same, pick({0})) == 1.0 / metric_floor);
    const PoolDataset ring = line_pool({0.0, 1.5, -1.5, 1.5, -1.5});
    CHECK(representativeness(ring, pick({0}), 4) == doctest::Approx(1.0 / 1.5).epsilon(1e-15));
    CHECK(code_of([&] { (void)representativeness(ring, pick({0, 1}), 4); }) == ErrorCode::precondition);
}

TEST_CASE("diversity and representativeness match brute force") {
    std::mt19937_64 gen(1);
    for (int trial = 0; trial < 20; ++trial) {
        const PoolDataset pool = oracle::random_pool(gen, 40, 1, 2, 3);
        Pcg64 rng(static_cast<std::uint64_t>(trial));
        const Selection s = pick(sample_without_replacement(40, 2 + static_cast<std::size_t>(trial), rng));
        const double d = oracle::diversity(pool.embeddings, s.indices);
        const double r = oracle::representativeness(pool.embeddings, s.indices, 10);
        CHECK(std::abs(diversity(pool, s) - d) <= 1e-9 * std::max(1.0, d));
        CHECK(std::abs(representativeness(pool, s) - r) <= 1e-9 * std::max(1.0, r));
    }
}

TEST_CASE("metrics are invariant to rigid motions") {
    std::mt19937_64 gen(2);
    const PoolDataset pool = oracle::random_pool(gen, 40, 1, 2, 2);
    PoolDataset moved = pool;
    const double angle = 0.7, c = std::cos(angle), s = std::sin(angle);
    for (std::size_t i = 0; i < pool.n; ++i) {
        const double x = pool.embeddings.at(i, 0), y = pool.embeddings.at(i, 1);
        moved.embeddings.at(i, 0) = c * x - s * y + 3.0;
        moved.embeddings.at(i, 1) = s * x + c * y - 7.0;
    }
    const Selection sel = pick({1, 5, 9, 22, 31});
    CHECK(std::abs(diversity(pool, sel) - diversity(moved, sel)) <= 1e-9);
    CHECK(std::abs(representativeness(pool, sel) - representativeness(moved, sel)) <= 1e-9);
}

TEST_CASE("label entropy") {
    PoolDataset pool = line_pool(std::vector<double>(8, 0.0));
    CHECK(code_of([&] { (void)label_entropy(pool, pick({0})); }) == ErrorCode::precondition);
    pool.gold_labels = std::vector<std::int64_t>{0, 0, 0, 0, 1, 1, 1, 1};
    CHECK(label_entropy(pool, pick({0, 4}), LabelSmoothing::none) == 0.0);
    CHECK(label_entropy(pool, pick({0, 1, 4, 5}), LabelSmoothing::none) == 0.0);
    // Matching distributions stay near zero after smoothing.
    CHECK(label_entropy(pool, pick({0, 1, 4, 5})) == 0.0);

    // Pool 50:50, selection 100:0 with add-one smoothing: q = (5/6, 1/6).
    const double skewed = label_entropy(pool, pick({0, 1, 2, 3}));
    const double expected = 0.5 * std::log(0.5 / (5.0 / 6.0)) + 0.5 * std::log(0.5 / (1.0 / 6.0));
    CHECK(skewed == doctest::Approx(expected).epsilon(1e-14));
    CHECK(skewed > 0.0);

    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 200; ++trial) {
        PoolDataset p = oracle::random_pool(gen, 30, 1, 3, 1);
        std::vector<std::int64_t> gold(30);
        for (auto& g : gold) g = static_cast<std::int64_t>(gen() % 3);
        p.gold_labels = gold;
        Pcg64 rng(static_cast<std::uint64_t>(trial));
        const Selection s = pick(sample_without_replacement(30, 6, rng));
        CHECK(label_entropy(p, s) >= 0.0);
    }
}

TEST_CASE("evaluate_selection and summarize") {
    std::mt19937_64 gen(4);
    PoolDataset pool = oracle::random_pool(gen, 30, 1, 2, 2);
    const Selection s{{0, 3, 7}, Algorithm::bt, 0, {}};
    MetricsReport r = evaluate_selection(pool, s);
    CHECK(r.algorithm == Algorithm::bt);
    CHECK(r.budget == 3);
    CHECK(r.diversity > 0.0);
    CHECK(r.representativeness > 0.0);
    CHECK_FALSE(r.label_entropy.has_value());
    std::vector<std::int64_t> gold(30, 0);
    gold[5] = 1;
    pool.gold_labels = gold;
    r = evaluate_selection(pool, s);
    REQUIRE(r.label_entropy.has_value());
    CHECK(*r.label_entropy_x100() == doctest::Approx(*r.label_entropy * 100.0));

    const std::vector<double> values{2.0, 4.0, 4.0, 4.0, 5.0, 5.0, 7.0, 9.0};
    const MetricSummary m = summarize(values);
    CHECK(m.mean == 5.0);
    CHECK(*m.stdev == doctest::Approx(std::sqrt(32.0 / 7.0)).epsilon(1e-15));
    const std::vector<double> single{1.25};
    CHECK_FALSE(summarize(single).stdev.has_value());
}

TEST_CASE("rank_algorithms") {
    RankTable t;
    t.algorithms = {"x", "y", "z"};
    t.datasets = {"d"};
    t.values = {{3.0, 1.0, 2.0}};
    CHECK(rank_algorithms(t) == std::vector<double>{1.0, 3.0, 2.0});
    t.higher_is_better = false;
    CHECK(rank_algorithms(t) == std::vector<double>{3.0, 1.0, 2.0});
    t.higher_is_better = true;

    t.datasets = {"d1", "d2"};
    t.values = {{3.0, 1.0, 2.0}, {1.0, 3.0, 2.0}};
    CHECK(rank_algorithms(t) == std::vector<double>{2.0, 2.0, 2.0});

    RankTable tie;
    tie.algorithms = {"a", "b", "c", "d"};
    tie.datasets = {"d"};
    tie.values = {{9.0, 5.0, 5.0, 1.0}};
    CHECK(rank_algorithms(tie, TiePolicy::competition) == std::vector<double>{1.0, 2.0, 2.0, 4.0});
    CHECK(rank_algorithms(tie, TiePolicy::mean) == std::vector<double>{1.0, 2.5, 2.5, 4.0});

    tie.values[0][2].reset();
    CHECK(code_of([&] { (void)rank_algorithms(tie); }) == ErrorCode::precondition);
}

TEST_CASE("rank_algorithms on a five-dataset accuracy table with ties") {
    RankTable t;
    t.algorithms = {"Random", "Entropy", "LC", "BT", "PPKL", "CAL", "BADGE", "IPUSD"};
    t.datasets = {"RTE", "SST-2", "SST-5", "TREC", "MRPC"};
    const std::vector<std::vector<double>> acc = {
        {65.3, 71.1, 71.8, 71.8, 59.6, 56.7, 68.7, 70.1},
        {92.1, 89.3, 91.4, 91.4, 89.8, 92.9, 93.2, 92.9},
        {52.8, 49.0, 48.8, 49.9, 53.5, 49.0, 51.2, 51.4},
        {83.8, 76.2, 72.6, 77.2, 77.4, 81.6, 82.7, 85.0},
        {69.3, 68.9, 70.1, 70.1, 65.4, 71.8, 70.3, 69.8},
    };
    for (const auto& row : acc) t.values.emplace_back(row.begin(), row.end());
    const auto ranks = rank_algorithms(t);
    CHECK(ranks[0] == 4.0);
    CHECK(ranks[3] == 4.0);
    CHECK(ranks[4] == doctest::Approx(5.6));
    CHECK(ranks[6] == 3.0);
    CHECK(ranks[7] == 3.0);
    // Mean-rank ties give a different IPUSD rank.
    const auto mean_ranks = rank_algorithms(t, TiePolicy::mean);
    CHECK(mean_ranks[7] == doctest::Approx(3.1));
}
