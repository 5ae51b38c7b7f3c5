#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace meal {

enum class ErrorCode {
    dimension_mismatch,
    non_finite,
    label_out_of_range,
    invalid_argument,
    precondition,
    schema_mismatch,
    bad_magic,
    unsupported_version,
    truncated,
    trailing_data,
    schema_violation,
    duplicate_name,
    oversize,
    io_failure,
};

std::string_view to_string(ErrorCode code);

/// Every failure in the library is reported through this type; the code is
/// stable and is what callers (and the CLI exit-code mapping) dispatch on.
class Error : public std::runtime_error {
public:
    Error(ErrorCode code, const std::string& message)
        : std::runtime_error(message), code_(code) {}

    ErrorCode code() const noexcept { return code_; }

private:
    ErrorCode code_;
};

/// Dense row-major rank-3 tensor of doubles.
struct Tensor3 {
    std::size_t dim0 = 0;
    std::size_t dim1 = 0;
    std::size_t dim2 = 0;
    std::vector<double> data;

    Tensor3() = default;
    Tensor3(std::size_t d0, std::size_t d1, std::size_t d2, double fill = 0.0)
        : dim0(d0), dim1(d1), dim2(d2), data(d0 * d1 * d2, fill) {}

    double& at(std::size_t i, std::size_t j, std::size_t k) {
        return data[(i * dim1 + j) * dim2 + k];
    }
    double at(std::size_t i, std::size_t j, std::size_t k) const {
        return data[(i * dim1 + j) * dim2 + k];
    }
    std::span<double> row(std::size_t i, std::size_t j) {
        return {data.data() + (i * dim1 + j) * dim2, dim2};
    }
    std::span<const double> row(std::size_t i, std::size_t j) const {
        return {data.data() + (i * dim1 + j) * dim2, dim2};
    }

    bool operator==(const Tensor3&) const = default;
};

/// Dense row-major matrix of doubles.
struct Matrix {
    std::size_t rows = 0;
    std::size_t cols = 0;
    std::vector<double> data;

    Matrix() = default;
    Matrix(std::size_t r, std::size_t c, double fill = 0.0)
        : rows(r), cols(c), data(r * c, fill) {}

    double& at(std::size_t i, std::size_t j) { return data[i * cols + j]; }
    double at(std::size_t i, std::size_t j) const { return data[i * cols + j]; }
    std::span<double> row(std::size_t i) { return {data.data() + i * cols, cols}; }
    std::span<const double> row(std::size_t i) const {
        return {data.data() + i * cols, cols};
    }

    bool operator==(const Matrix&) const = default;
};

/// Zero-shot model outputs for an unlabeled pool.
///
/// `logits` holds the verbalizer-restricted raw scores (N x prompts x labels).
/// `hidden_states`, when present, is N x prompts x H and feeds the gradient
/// embeddings; `gold_labels` is only consulted by the metrics.
struct PoolDataset {
    std::size_t n = 0;
    std::size_t num_prompts = 0;
    std::size_t num_labels = 0;
    Tensor3 logits;
    Matrix embeddings;
    std::optional<Tensor3> hidden_states;
    std::optional<std::vector<std::int64_t>> gold_labels;
    std::vector<std::string> example_ids;

    bool operator==(const PoolDataset&) const = default;
};

/// Builds a pool from logits and embeddings with ids "0".."N-1".
PoolDataset make_pool(Tensor3 logits, Matrix embeddings);

/// Per-prompt label distributions, same shape as PoolDataset::logits.
struct ProbTensor {
    Tensor3 probs;

    std::size_t n() const { return probs.dim0; }
    std::size_t num_prompts() const { return probs.dim1; }
    std::size_t num_labels() const { return probs.dim2; }
    std::span<const double> row(std::size_t i, std::size_t p) const {
        return probs.row(i, p);
    }
};

enum class Algorithm { random, entropy, lc, bt, ppkl, cal, badge, ipusd };

std::string_view to_string(Algorithm algo);
/// Throws Error(invalid_argument) for an unknown tag.
Algorithm parse_algorithm(std::string_view tag);
/// True for algorithms whose output depends on the seed.
bool is_seeded(Algorithm algo);
std::span<const Algorithm> all_algorithms();

struct Selection {
    std::vector<std::size_t> indices;
    Algorithm algorithm = Algorithm::random;
    std::uint64_t seed = 0;
    std::optional<double> score;

    bool operator==(const Selection&) const = default;
};

/// Throws Error naming the first violated invariant.
void validate_pool(const PoolDataset& pool);

/// Indices must be unique and below `n`.
void validate_selection(const Selection& selection, std::size_t n);

/// Max-subtracted softmax of one row.
std::vector<double> softmax(std::span<const double> logits);
void softmax_into(std::span<const double> logits, std::span<double> out);

ProbTensor softmax_probs(const PoolDataset& pool);

inline constexpr double kl_floor = 1e-12;

/// KL(p || q) in nats. Zero entries of p contribute nothing; entries of q are
/// floored at kl_floor.
double kl_divergence(std::span<const double> p, std::span<const double> q);

double shannon_entropy(std::span<const double> p);

/// Shortest decimal text that parses back to exactly `value`.
std::string format_double(double value);

}  // namespace meal
