#include <algorithm>
#include <functional>
#include <numeric>
#include <random>
#include <set>

#include <doctest.h>

#include "meal/clustering.hpp"
#include "oracles.hpp"

using namespace meal;

namespace {

Matrix points_1d(const std::vector<double>& xs) {
    Matrix m(xs.size(), 1);
    m.data = xs;
    return m;
}

Matrix random_points(std::mt19937_64& gen, std::size_t n, std::size_t dim) {
    std::normal_distribution<double> normal(0.0, 1.0);
    Matrix m(n, dim);
    for (double& v : m.data) v = normal(gen);
    return m;
}

std::vector<std::size_t> all_rows(std::size_t n) {
    std::vector<std::size_t> rows(n);
    std::iota(rows.begin(), rows.end(), std::size_t{0});
    return rows;
}

ErrorCode code_of(const std::function<void()>& fn) {
    try {
        fn();
    } catch (const Error& e) {
        return e.code();
    }
    FAIL("expected meal::Error");
    return ErrorCode::io_failure;
}

}  // namespace

TEST_CASE("knn on a line") {
    const Matrix m = points_1d({0.0, 1.0, 5.0});
    const std::vector<std::size_t> q{0};
    const auto rows = all_rows(3);
    CHECK(knn(q, rows, m, 1) == std::vector<std::vector<std::size_t>>{{1}});
    CHECK(knn(q, rows, m, 2) == std::vector<std::vector<std::size_t>>{{1, 2}});
    CHECK(code_of([&] { (void)knn(q, rows, m, 3); }) == ErrorCode::precondition);
}

TEST_CASE("knn breaks distance ties by index") {
    const Matrix m = points_1d({0.0, 1.0, -1.0, 1.0});
    const std::vector<std::size_t> q{0};
    const auto rows = all_rows(4);
    CHECK(knn(q, rows, m, 3)[0] == std::vector<std::size_t>{1, 2, 3});
}

TEST_CASE("knn matches the sort oracle and ignores base order") {
    std::mt19937_64 gen(3);
    for (int trial = 0; trial < 20; ++trial) {
        const Matrix m = random_points(gen, 50, 8);
        auto rows = all_rows(50);
        const auto got = knn(rows, rows, m, 5);
        auto shuffled = rows;
        std::shuffle(shuffled.begin(), shuffled.end(), gen);
        const auto again = knn(rows, shuffled, m, 5);
        for (std::size_t q = 0; q < 50; ++q) {
            CHECK(got[q] == oracle::nearest(m, q, rows, 5));
            CHECK(again[q] == got[q]);
        }
        const auto everything = knn(rows, rows, m, 49);
        for (std::size_t q = 0; q < 50; ++q) CHECK(everything[q] == oracle::nearest(m, q, rows, 49));
    }
}

TEST_CASE("kmeanspp_seed edge cases") {
    std::mt19937_64 gen(4);
    const Matrix m = random_points(gen, 9, 2);
    auto perm = kmeanspp_seed(m, 9, 1);
    std::sort(perm.begin(), perm.end());
    CHECK(perm == all_rows(9));

    const Matrix same(6, 3, 2.5);
    for (std::uint64_t seed = 0; seed < 50; ++seed) {
        const auto two = kmeanspp_seed(same, 2, seed);
        CHECK(two.size() == 2);
        CHECK(two[0] != two[1]);
    }
    CHECK(code_of([&] { (void)kmeanspp_seed(m, 10, 1); }) == ErrorCode::precondition);
    CHECK(kmeanspp_seed(m, 4, 77) == kmeanspp_seed(m, 4, 77));
}

TEST_CASE("kmeanspp_seed first pick is uniform") {
    const Matrix m = points_1d({0, 1, 2, 3, 4});
    std::vector<int> hits(5, 0);
    for (std::uint64_t seed = 0; seed < 20000; ++seed) ++hits[kmeanspp_seed(m, 1, seed)[0]];
    for (int h : hits) CHECK(std::abs(h - 4000) < 300);
}

TEST_CASE("kmeanspp_seed second pick follows D^2") {
    // Points 0, 1, 3 on a line. Given the first pick, the second is drawn
    // proportional to squared distance.
    const Matrix m = points_1d({0.0, 1.0, 3.0});
    std::vector<std::vector<int>> counts(3, std::vector<int>(3, 0));
    for (std::uint64_t seed = 0; seed < 60000; ++seed) {
        const auto s = kmeanspp_seed(m, 2, seed);
        ++counts[s[0]][s[1]];
    }
    const double d2[3][3] = {{0, 1, 9}, {1, 0, 4}, {9, 4, 0}};
    for (std::size_t a = 0; a < 3; ++a) {
        const double total = d2[a][0] + d2[a][1] + d2[a][2];
        const int firsts = counts[a][0] + counts[a][1] + counts[a][2];
        for (std::size_t b = 0; b < 3; ++b) {
            const double expected = d2[a][b] / total;
            const double observed = static_cast<double>(counts[a][b]) / firsts;
            CHECK(std::abs(observed - expected) < 0.02);
        }
    }
}

TEST_CASE("kmeanspp_seed covers separated clusters") {
    std::mt19937_64 gen(5);
    std::normal_distribution<double> noise(0.0, 0.1);
    Matrix m(30, 2);
    const double centers[3][2] = {{0, 0}, {100, 0}, {0, 100}};
    for (std::size_t i = 0; i < 30; ++i) {
        m.at(i, 0) = centers[i / 10][0] + noise(gen);
        m.at(i, 1) = centers[i / 10][1] + noise(gen);
    }
    int good = 0;
    for (std::uint64_t seed = 0; seed < 10000; ++seed) {
        std::set<std::size_t> clusters;
        for (std::size_t idx : kmeanspp_seed(m, 3, seed)) clusters.insert(idx / 10);
        if (clusters.size() == 3) ++good;
    }
    CHECK(good >= 9500);
}

TEST_CASE("kmeans closed-form blobs") {
    const Matrix m = points_1d({0.0, 0.1, 10.0, 10.1});
    for (std::uint64_t seed = 0; seed < 20; ++seed) {
        const KMeansResult r = kmeans(m, 2, seed);
        std::vector<double> c{r.centers.at(0, 0), r.centers.at(1, 0)};
        std::sort(c.begin(), c.end());
        CHECK(c[0] == doctest::Approx(0.05));
        CHECK(c[1] == doctest::Approx(10.05));
        CHECK(r.assignments[0] == r.assignments[1]);
        CHECK(r.assignments[2] == r.assignments[3]);
        CHECK(r.assignments[0] != r.assignments[2]);
    }
}

TEST_CASE("kmeans with k = N is exact") {
    std::mt19937_64 gen(6);
    const Matrix m = random_points(gen, 7, 3);
    const KMeansResult r = kmeans(m, 7, 2);
    CHECK(r.inertia == 0.0);
    std::set<std::size_t> labels(r.assignments.begin(), r.assignments.end());
    CHECK(labels.size() == 7);
    CHECK(code_of([&] { (void)kmeans(m, 8, 2); }) == ErrorCode::precondition);
}

TEST_CASE("kmeans invariants on random data") {
    std::mt19937_64 gen(8);
    for (int trial = 0; trial < 10; ++trial) {
        const Matrix m = random_points(gen, 200, 4);
        const KMeansResult r = kmeans(m, 8, static_cast<std::uint64_t>(trial));
        REQUIRE(r.assignments.size() == 200);
        double inertia = 0.0;
        std::vector<std::size_t> sizes(8, 0);
        for (std::size_t i = 0; i < 200; ++i) {
            const std::size_t a = r.assignments[i];
            REQUIRE(a < 8);
            ++sizes[a];
            const double own = squared_distance(m.row(i), r.centers.row(a));
            inertia += own;
            for (std::size_t c = 0; c < 8; ++c) {
                CHECK(std::sqrt(own) <= std::sqrt(squared_distance(m.row(i), r.centers.row(c))) + 1e-9);
            }
        }
        CHECK(std::abs(inertia - r.inertia) <= 1e-9 * std::max(1.0, inertia));
        CHECK(std::all_of(sizes.begin(), sizes.end(), [](std::size_t s) { return s > 0; }));
        for (std::size_t it = 1; it < r.inertia_history.size(); ++it) {
            CHECK(r.inertia_history[it] <= r.inertia_history[it - 1] + 1e-12);
        }
        CHECK(r.iterations_run <= 100);
        const KMeansResult again = kmeans(m, 8, static_cast<std::uint64_t>(trial));
        CHECK(again.assignments == r.assignments);
        CHECK(again.centers == r.centers);
        CHECK(again.inertia == r.inertia);
    }
}

TEST_CASE("kmeans keeps k clusters when points coincide") {
    Matrix m(10, 2, 0.0);
    for (std::size_t i = 5; i < 10; ++i) m.at(i, 0) = 1.0;
    const KMeansResult r = kmeans(m, 4, 3);
    std::set<std::size_t> labels(r.assignments.begin(), r.assignments.end());
    CHECK(labels.size() == 4);
}
