#include "meal/core.hpp"

#include <algorithm>
#include <array>
#include <charconv>
#include <cmath>
#include <sstream>

namespace meal {

std::string_view to_string(ErrorCode code) {
    switch (code) {
        case ErrorCode::dimension_mismatch: return "dimension_mismatch";
        case ErrorCode::non_finite: return "non_finite";
        case ErrorCode::label_out_of_range: return "label_out_of_range";
        case ErrorCode::invalid_argument: return "invalid_argument";
        case ErrorCode::precondition: return "precondition";
        case ErrorCode::schema_mismatch: return "schema_mismatch";
        case ErrorCode::bad_magic: return "bad_magic";
        case ErrorCode::unsupported_version: return "unsupported_version";
        case ErrorCode::truncated: return "truncated";
        case ErrorCode::trailing_data: return "trailing_data";
        case ErrorCode::schema_violation: return "schema_violation";
        case ErrorCode::duplicate_name: return "duplicate_name";
        case ErrorCode::oversize: return "oversize";
        case ErrorCode::io_failure: return "io_failure";
    }
    return "unknown";
}

namespace {

constexpr std::array<Algorithm, 8> kAlgorithms = {
    Algorithm::random, Algorithm::entropy, Algorithm::lc,    Algorithm::bt,
    Algorithm::ppkl,   Algorithm::cal,     Algorithm::badge, Algorithm::ipusd,
};

[[noreturn]] void fail_dims(const std::string& what) {
    throw Error(ErrorCode::dimension_mismatch, what);
}

void check_finite(std::span<const double> values, const char* name,
                  std::span<const std::size_t> dims) {
    for (std::size_t flat = 0; flat < values.size(); ++flat) {
        if (std::isfinite(values[flat])) continue;
        std::vector<std::size_t> coord(dims.size());
        std::size_t rem = flat;
        for (std::size_t d = dims.size(); d-- > 0;) {
            coord[d] = rem % dims[d];
            rem /= dims[d];
        }
        std::ostringstream msg;
        msg << "non-finite " << name << " value at (";
        for (std::size_t d = 0; d < coord.size(); ++d) {
            msg << (d ? "," : "") << coord[d];
        }
        msg << ")";
        throw Error(ErrorCode::non_finite, msg.str());
    }
}

}  // namespace

std::string_view to_string(Algorithm algo) {
    switch (algo) {
        case Algorithm::random: return "random";
        case Algorithm::entropy: return "entropy";
        case Algorithm::lc: return "lc";
        case Algorithm::bt: return "bt";
        case Algorithm::ppkl: return "ppkl";
        case Algorithm::cal: return "cal";
        case Algorithm::badge: return "badge";
        case Algorithm::ipusd: return "ipusd";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view tag) {
    for (Algorithm a : kAlgorithms) {
        if (to_string(a) == tag) return a;
    }
    throw Error(ErrorCode::invalid_argument,
                "unknown algorithm tag '" + std::string(tag) + "'");
}

bool is_seeded(Algorithm algo) {
    return algo == Algorithm::random || algo == Algorithm::badge ||
           algo == Algorithm::ipusd;
}

std::span<const Algorithm> all_algorithms() { return kAlgorithms; }

PoolDataset make_pool(Tensor3 logits, Matrix embeddings) {
    PoolDataset pool;
    pool.n = logits.dim0;
    pool.num_prompts = logits.dim1;
    pool.num_labels = logits.dim2;
    pool.logits = std::move(logits);
    pool.embeddings = std::move(embeddings);
    pool.example_ids.reserve(pool.n);
    for (std::size_t i = 0; i < pool.n; ++i) {
        pool.example_ids.push_back(std::to_string(i));
    }
    return pool;
}

void validate_pool(const PoolDataset& pool) {
    if (pool.n < 1) fail_dims("pool must contain at least one example");
    if (pool.num_prompts < 1) fail_dims("pool must have at least one prompt");
    if (pool.num_labels < 2) fail_dims("pool must have at least two labels");

    const Tensor3& lg = pool.logits;
    if (lg.dim0 != pool.n || lg.dim1 != pool.num_prompts ||
        lg.dim2 != pool.num_labels || lg.data.size() != lg.dim0 * lg.dim1 * lg.dim2) {
        fail_dims("logits shape does not match n x num_prompts x num_labels");
    }
    const Matrix& emb = pool.embeddings;
    if (emb.rows != pool.n || emb.cols < 1 || emb.data.size() != emb.rows * emb.cols) {
        fail_dims("embeddings must be n x D with D >= 1");
    }
    if (pool.hidden_states) {
        const Tensor3& hs = *pool.hidden_states;
        if (hs.dim0 != pool.n || hs.dim1 != pool.num_prompts || hs.dim2 < 1 ||
            hs.data.size() != hs.dim0 * hs.dim1 * hs.dim2) {
            fail_dims("hidden_states must be n x num_prompts x H with H >= 1");
        }
    }
    if (pool.example_ids.size() != pool.n) {
        fail_dims("example_ids must have one entry per example");
    }

    const std::array<std::size_t, 3> logit_dims{lg.dim0, lg.dim1, lg.dim2};
    check_finite(lg.data, "logits", logit_dims);
    const std::array<std::size_t, 2> emb_dims{emb.rows, emb.cols};
    check_finite(emb.data, "embeddings", emb_dims);
    if (pool.hidden_states) {
        const Tensor3& hs = *pool.hidden_states;
        const std::array<std::size_t, 3> hs_dims{hs.dim0, hs.dim1, hs.dim2};
        check_finite(hs.data, "hidden_states", hs_dims);
    }

    if (pool.gold_labels) {
        const auto& gold = *pool.gold_labels;
        if (gold.size() != pool.n) fail_dims("gold_labels must have length n");
        for (std::size_t i = 0; i < gold.size(); ++i) {
            if (gold[i] < 0 || static_cast<std::size_t>(gold[i]) >= pool.num_labels) {
                throw Error(ErrorCode::label_out_of_range,
                            "gold label " + std::to_string(gold[i]) + " at index " +
                                std::to_string(i) + " outside [0, " +
                                std::to_string(pool.num_labels) + ")");
            }
        }
    }
}

void validate_selection(const Selection& selection, std::size_t n) {
    std::vector<bool> seen(n, false);
    for (std::size_t idx : selection.indices) {
        if (idx >= n) {
            throw Error(ErrorCode::invalid_argument, "selection index " + std::to_string(idx) +
                                                         " outside pool of size " +
                                                         std::to_string(n));
        }
        if (seen[idx]) {
            throw Error(ErrorCode::invalid_argument,
                        "selection index " + std::to_string(idx) + " appears twice");
        }
        seen[idx] = true;
    }
}

void softmax_into(std::span<const double> logits, std::span<double> out) {
    const double peak = *std::max_element(logits.begin(), logits.end());
    double total = 0.0;
    for (std::size_t j = 0; j < logits.size(); ++j) {
        out[j] = std::exp(logits[j] - peak);
        total += out[j];
    }
    for (double& v : out) v /= total;
}

std::vector<double> softmax(std::span<const double> logits) {
    if (logits.empty()) throw Error(ErrorCode::invalid_argument, "softmax of empty row");
    std::vector<double> out(logits.size());
    softmax_into(logits, out);
    return out;
}

ProbTensor softmax_probs(const PoolDataset& pool) {
    validate_pool(pool);
    ProbTensor out{Tensor3(pool.n, pool.num_prompts, pool.num_labels)};
    for (std::size_t i = 0; i < pool.n; ++i) {
        for (std::size_t p = 0; p < pool.num_prompts; ++p) {
            softmax_into(pool.logits.row(i, p), out.probs.row(i, p));
        }
    }
    return out;
}

double kl_divergence(std::span<const double> p, std::span<const double> q) {
    if (p.size() != q.size()) {
        throw Error(ErrorCode::dimension_mismatch,
                    "kl_divergence length mismatch: " + std::to_string(p.size()) +
                        " vs " + std::to_string(q.size()));
    }
    double total = 0.0;
    for (std::size_t j = 0; j < p.size(); ++j) {
        if (p[j] <= 0.0) continue;
        total += p[j] * std::log(p[j] / std::max(q[j], kl_floor));
    }
    return total;
}

double shannon_entropy(std::span<const double> p) {
    double total = 0.0;
    for (double v : p) {
        if (v > 0.0) total -= v * std::log(v);
    }
    return total;
}

std::string format_double(double value) {
    char buf[64];
    const auto res = std::to_chars(buf, buf + sizeof buf, value);
    return std::string(buf, res.ptr);
}

}  // namespace meal
