#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "meal/core.hpp"

namespace meal {

/// Per-run logits over an evaluation set: runs[r] is N x prompts x labels.
struct RunLogits {
    std::vector<Tensor3> runs;
};

struct NamedTensor {
    std::string name;
    std::vector<std::size_t> shape;
    std::vector<double> values;

    bool operator==(const NamedTensor&) const = default;
};

/// A checkpoint: tensors in insertion order, names unique.
struct NamedTensorSet {
    std::vector<NamedTensor> tensors;

    const NamedTensor* find(const std::string& name) const;
    bool operator==(const NamedTensorSet&) const = default;
};

std::size_t element_count(const std::vector<std::size_t>& shape);

/// Throws duplicate_name, dimension_mismatch or non_finite when names repeat,
/// a tensor's value count disagrees with its shape, or a value is NaN/Inf.
void validate_tensor_set(const NamedTensorSet& set);

/// Throws schema_mismatch naming the first tensor that is missing, extra, or
/// shaped differently in `other`.
void require_same_schema(const NamedTensorSet& reference, const NamedTensorSet& other);

/// Softmax of the prompt-averaged logits, N x labels.
Matrix predict_multiprompt(const Tensor3& logits);

/// Softmax of logits averaged over runs and prompts, N x labels.
Matrix ensemble_pred(const RunLogits& runs);

/// Elementwise mean of every tensor across checkpoints. Tensors whose name
/// matches one of `exclude_patterns` (shell globs) are copied from the first
/// checkpoint unchanged.
NamedTensorSet ensemble_para(const std::vector<NamedTensorSet>& checkpoints,
                             const std::vector<std::string>& exclude_patterns = {});

}  // namespace meal
