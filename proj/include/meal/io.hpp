#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include <json.hpp>

#include "meal/core.hpp"
#include "meal/ensemble.hpp"
#include "meal/metrics.hpp"

namespace meal {

inline constexpr std::string_view pool_magic = "MEALPOOL";
inline constexpr std::string_view tensor_magic = "MEALTENS";
inline constexpr std::uint32_t format_version = 1;

struct ReadOptions {
    /// Upper bound on the file size, header length and declared payload.
    std::uint64_t max_bytes = std::uint64_t{8} << 30;
};

/// Binary envelope: magic (8 bytes) | version (u32 LE) | header length
/// (u64 LE) | UTF-8 JSON header | f32 LE payloads in manifest order.
std::string encode_pool(const PoolDataset& pool);
PoolDataset decode_pool(std::string_view bytes, const ReadOptions& options = {});

std::string encode_tensors(const NamedTensorSet& set);
NamedTensorSet decode_tensors(std::string_view bytes, const ReadOptions& options = {});

PoolDataset read_pool(const std::filesystem::path& path, const ReadOptions& options = {});
void write_pool(const PoolDataset& pool, const std::filesystem::path& path);

NamedTensorSet read_tensors(const std::filesystem::path& path, const ReadOptions& options = {});
void write_tensors(const NamedTensorSet& set, const std::filesystem::path& path);

/// Selection file contents beyond the Selection itself.
struct SelectionRecord {
    Selection selection;
    std::size_t pool_size = 0;
    std::vector<std::string> example_ids;
};

SelectionRecord make_selection_record(const Selection& selection, const PoolDataset& pool);

std::string encode_selection(const SelectionRecord& record);
SelectionRecord decode_selection(std::string_view text);

void write_selection(const SelectionRecord& record, const std::filesystem::path& path);
SelectionRecord read_selection(const std::filesystem::path& path);

nlohmann::ordered_json metrics_report_json(const MetricsReport& report);

/// Rank-3 tensor named `name`; throws schema_violation if absent or of
/// another rank.
Tensor3 tensor3_from(const NamedTensorSet& set, const std::string& name);
NamedTensor tensor_from_matrix(const std::string& name, const Matrix& m);

std::string read_file(const std::filesystem::path& path,
                      std::uint64_t max_bytes = ReadOptions{}.max_bytes);
/// Writes to a sibling temporary file and renames it into place.
void write_file_atomic(const std::filesystem::path& path, std::string_view bytes);

}  // namespace meal
