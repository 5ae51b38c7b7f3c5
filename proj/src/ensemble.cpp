#include "meal/ensemble.hpp"

#include <fnmatch.h>

#include <cmath>
#include <unordered_set>

namespace meal {
namespace {

std::string shape_string(const std::vector<std::size_t>& shape) {
    std::string s = "[";
    for (std::size_t d = 0; d < shape.size(); ++d) {
        if (d) s += ",";
        s += std::to_string(shape[d]);
    }
    return s + "]";
}

bool matches_any(const std::string& name, const std::vector<std::string>& patterns) {
    for (const std::string& pattern : patterns) {
        if (::fnmatch(pattern.c_str(), name.c_str(), 0) == 0) return true;
    }
    return false;
}

void check_finite_logits(const Tensor3& t) {
    for (double v : t.data) {
        if (!std::isfinite(v)) throw Error(ErrorCode::non_finite, "run logits must be finite");
    }
}

}  // namespace

const NamedTensor* NamedTensorSet::find(const std::string& name) const {
    for (const NamedTensor& t : tensors) {
        if (t.name == name) return &t;
    }
    return nullptr;
}

std::size_t element_count(const std::vector<std::size_t>& shape) {
    std::size_t count = 1;
    for (std::size_t d : shape) count *= d;
    return count;
}

void validate_tensor_set(const NamedTensorSet& set) {
    std::unordered_set<std::string> seen;
    for (const NamedTensor& t : set.tensors) {
        if (!seen.insert(t.name).second) {
            throw Error(ErrorCode::duplicate_name, "duplicate tensor name '" + t.name + "'");
        }
        if (element_count(t.shape) != t.values.size()) {
            throw Error(ErrorCode::dimension_mismatch,
                        "tensor '" + t.name + "' has shape " + shape_string(t.shape) + " but " +
                            std::to_string(t.values.size()) + " values");
        }
        for (std::size_t e = 0; e < t.values.size(); ++e) {
            if (!std::isfinite(t.values[e])) {
                throw Error(ErrorCode::non_finite, "non-finite value in tensor '" + t.name +
                                                       "' at element " + std::to_string(e));
            }
        }
    }
}

void require_same_schema(const NamedTensorSet& reference, const NamedTensorSet& other) {
    for (const NamedTensor& t : reference.tensors) {
        const NamedTensor* match = other.find(t.name);
        if (match == nullptr) {
            throw Error(ErrorCode::schema_mismatch, "tensor '" + t.name + "' is missing");
        }
        if (match->shape != t.shape) {
            throw Error(ErrorCode::schema_mismatch,
                        "tensor '" + t.name + "' has shape " + shape_string(match->shape) +
                            ", expected " + shape_string(t.shape));
        }
    }
    for (const NamedTensor& t : other.tensors) {
        if (reference.find(t.name) == nullptr) {
            throw Error(ErrorCode::schema_mismatch, "unexpected tensor '" + t.name + "'");
        }
    }
}

Matrix predict_multiprompt(const Tensor3& logits) {
    return ensemble_pred(RunLogits{{logits}});
}

Matrix ensemble_pred(const RunLogits& runs) {
    if (runs.runs.empty()) throw Error(ErrorCode::invalid_argument, "ensemble_pred: no runs");
    const Tensor3& first = runs.runs.front();
    const std::size_t n = first.dim0;
    const std::size_t prompts = first.dim1;
    const std::size_t labels = first.dim2;
    if (prompts == 0 || labels == 0) {
        throw Error(ErrorCode::dimension_mismatch, "ensemble_pred: empty prompt or label axis");
    }
    for (const Tensor3& run : runs.runs) {
        if (run.dim0 != n || run.dim1 != prompts || run.dim2 != labels) {
            throw Error(ErrorCode::dimension_mismatch, "ensemble_pred: runs differ in shape");
        }
        check_finite_logits(run);
    }

    const double denom = static_cast<double>(runs.runs.size() * prompts);
    Matrix out(n, labels);
    std::vector<double> mean(labels);
    for (std::size_t i = 0; i < n; ++i) {
        std::fill(mean.begin(), mean.end(), 0.0);
        for (const Tensor3& run : runs.runs) {
            for (std::size_t p = 0; p < prompts; ++p) {
                const auto row = run.row(i, p);
                for (std::size_t y = 0; y < labels; ++y) mean[y] += row[y];
            }
        }
        for (double& v : mean) v /= denom;
        softmax_into(mean, out.row(i));
    }
    return out;
}

NamedTensorSet ensemble_para(const std::vector<NamedTensorSet>& checkpoints,
                             const std::vector<std::string>& exclude_patterns) {
    if (checkpoints.empty()) {
        throw Error(ErrorCode::invalid_argument, "ensemble_para: no checkpoints");
    }
    const NamedTensorSet& reference = checkpoints.front();
    for (const NamedTensorSet& ckpt : checkpoints) {
        validate_tensor_set(ckpt);
        require_same_schema(reference, ckpt);
    }

    NamedTensorSet out = reference;
    const double count = static_cast<double>(checkpoints.size());
    for (NamedTensor& tensor : out.tensors) {
        if (matches_any(tensor.name, exclude_patterns)) continue;
        // Accumulate offsets from the first checkpoint so that identical
        // inputs reproduce their values bit for bit.
        const std::vector<double>& anchor = reference.find(tensor.name)->values;
        std::vector<double> offset(anchor.size(), 0.0);
        for (const NamedTensorSet& ckpt : checkpoints) {
            const NamedTensor& src = *ckpt.find(tensor.name);
            for (std::size_t e = 0; e < offset.size(); ++e) offset[e] += src.values[e] - anchor[e];
        }
        for (std::size_t e = 0; e < offset.size(); ++e) {
            tensor.values[e] = anchor[e] + offset[e] / count;
        }
    }
    return out;
}

}  // namespace meal
