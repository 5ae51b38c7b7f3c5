#include "meal/io.hpp"

#include <algorithm>
#include <bit>
#include <cmath>
#include <fstream>
#include <limits>
#include <map>
#include <optional>
#include <set>
#include <system_error>

namespace meal {
namespace {

using ordered_json = nlohmann::ordered_json;
using json = nlohmann::json;

constexpr std::size_t kPrefixSize = 8 + 4 + 8;

[[noreturn]] void schema_error(const std::string& what) {
    throw Error(ErrorCode::schema_violation, what);
}

void put_u32(std::string& out, std::uint32_t v) {
    for (int s = 0; s < 32; s += 8) out.push_back(static_cast<char>((v >> s) & 0xFFu));
}

void put_u64(std::string& out, std::uint64_t v) {
    for (int s = 0; s < 64; s += 8) out.push_back(static_cast<char>((v >> s) & 0xFFu));
}

std::uint64_t get_le(std::string_view bytes, std::size_t at, int width) {
    std::uint64_t v = 0;
    for (int b = 0; b < width; ++b) {
        v |= static_cast<std::uint64_t>(static_cast<unsigned char>(bytes[at + b])) << (8 * b);
    }
    return v;
}

void put_values(std::string& out, const std::vector<double>& values, const std::string& name) {
    for (double v : values) {
        const auto f = static_cast<float>(v);
        if (!std::isfinite(f)) {
            throw Error(ErrorCode::non_finite, "tensor '" + name + "' holds a value that is not a finite f32");
        }
        put_u32(out, std::bit_cast<std::uint32_t>(f));
    }
}

std::vector<double> get_values(std::string_view payload, std::uint64_t offset, std::size_t count) {
    std::vector<double> out(count);
    for (std::size_t e = 0; e < count; ++e) {
        const auto bits = static_cast<std::uint32_t>(get_le(payload, offset + 4 * e, 4));
        out[e] = static_cast<double>(std::bit_cast<float>(bits));
    }
    return out;
}

std::string dump_header(const ordered_json& header) {
    try {
        return header.dump();
    } catch (const nlohmann::json::exception& e) {
        throw Error(ErrorCode::invalid_argument, std::string("cannot encode header: ") + e.what());
    }
}

std::string envelope(std::string_view magic, const ordered_json& header) {
    const std::string text = dump_header(header);
    std::string out(magic);
    put_u32(out, format_version);
    put_u64(out, text.size());
    out += text;
    return out;
}

struct ManifestEntry {
    std::string name;
    std::vector<std::size_t> shape;
    std::uint64_t offset = 0;
    std::size_t count = 0;
};

struct Envelope {
    json header;
    std::string_view payload;
};

Envelope open_envelope(std::string_view bytes, std::string_view magic, const ReadOptions& options) {
    if (bytes.size() > options.max_bytes) {
        throw Error(ErrorCode::oversize, "file exceeds the configured size cap");
    }
    const std::size_t probe = std::min(bytes.size(), magic.size());
    if (bytes.substr(0, probe) != magic.substr(0, probe)) {
        throw Error(ErrorCode::bad_magic, "expected magic '" + std::string(magic) + "'");
    }
    if (bytes.size() < kPrefixSize) throw Error(ErrorCode::truncated, "file shorter than its fixed prefix");

    const auto version = static_cast<std::uint32_t>(get_le(bytes, 8, 4));
    if (version != format_version) {
        throw Error(ErrorCode::unsupported_version,
                    "format version " + std::to_string(version) + " is not supported");
    }
    const std::uint64_t header_len = get_le(bytes, 12, 8);
    if (header_len > options.max_bytes) {
        throw Error(ErrorCode::oversize, "header length exceeds the configured size cap");
    }
    if (header_len > bytes.size() - kPrefixSize) {
        throw Error(ErrorCode::truncated, "header extends past the end of the file");
    }
    const std::string_view text = bytes.substr(kPrefixSize, header_len);
    json header = json::parse(text.begin(), text.end(), nullptr, false);
    if (header.is_discarded()) schema_error("header is not valid JSON");
    if (!header.is_object()) schema_error("header must be a JSON object");
    return {std::move(header), bytes.substr(kPrefixSize + header_len)};
}

std::uint64_t get_uint(const json& obj, const char* key) {
    const auto it = obj.find(key);
    if (it == obj.end()) schema_error(std::string("header is missing '") + key + "'");
    if (!it->is_number_unsigned()) schema_error(std::string("'") + key + "' must be a non-negative integer");
    return it->get<std::uint64_t>();
}

std::vector<ManifestEntry> parse_manifest(const json& header, std::string_view payload,
                                          const ReadOptions& options) {
    const auto it = header.find("tensors");
    if (it == header.end() || !it->is_array()) schema_error("header needs a 'tensors' array");

    std::vector<ManifestEntry> entries;
    std::set<std::string> names;
    std::uint64_t expected_offset = 0;
    for (const json& item : *it) {
        if (!item.is_object()) schema_error("manifest entries must be objects");
        const auto name_it = item.find("name");
        if (name_it == item.end() || !name_it->is_string()) schema_error("manifest entry needs a string 'name'");
        ManifestEntry entry;
        entry.name = name_it->get<std::string>();
        if (!names.insert(entry.name).second) {
            throw Error(ErrorCode::duplicate_name, "duplicate tensor name '" + entry.name + "'");
        }
        const auto shape_it = item.find("shape");
        if (shape_it == item.end() || !shape_it->is_array()) {
            schema_error("tensor '" + entry.name + "' needs a 'shape' array");
        }
        std::uint64_t count = 1;
        for (const json& dim : *shape_it) {
            if (!dim.is_number_unsigned()) schema_error("tensor '" + entry.name + "' has a bad dimension");
            const auto d = dim.get<std::uint64_t>();
            if (d != 0 && count > options.max_bytes / 4 / d) {
                throw Error(ErrorCode::oversize, "tensor '" + entry.name + "' exceeds the size cap");
            }
            count *= d;
            entry.shape.push_back(static_cast<std::size_t>(d));
        }
        entry.count = static_cast<std::size_t>(count);
        entry.offset = get_uint(item, "offset");
        if (entry.offset != expected_offset) {
            schema_error("tensor '" + entry.name + "' offset " + std::to_string(entry.offset) +
                         " is not contiguous (expected " + std::to_string(expected_offset) + ")");
        }
        expected_offset += 4 * count;
        if (expected_offset > options.max_bytes) {
            throw Error(ErrorCode::oversize, "declared payload exceeds the size cap");
        }
        entries.push_back(std::move(entry));
    }
    if (payload.size() < expected_offset) {
        throw Error(ErrorCode::truncated, "payload holds " + std::to_string(payload.size()) +
                                              " bytes, manifest declares " +
                                              std::to_string(expected_offset));
    }
    if (payload.size() > expected_offset) {
        throw Error(ErrorCode::trailing_data, "payload has " +
                                                  std::to_string(payload.size() - expected_offset) +
                                                  " bytes beyond the manifest");
    }
    return entries;
}

ordered_json manifest_entry(const std::string& name, const std::vector<std::size_t>& shape,
                            std::uint64_t offset) {
    ordered_json e;
    e["name"] = name;
    e["shape"] = shape;
    e["offset"] = offset;
    return e;
}

}  // namespace

std::string encode_pool(const PoolDataset& pool) {
    validate_pool(pool);
    ordered_json header;
    header["n"] = pool.n;
    header["num_prompts"] = pool.num_prompts;
    header["num_labels"] = pool.num_labels;
    header["embedding_dim"] = pool.embeddings.cols;
    if (pool.hidden_states) header["hidden_dim"] = pool.hidden_states->dim2;

    ordered_json tensors = ordered_json::array();
    std::uint64_t offset = 0;
    tensors.push_back(manifest_entry("logits", {pool.n, pool.num_prompts, pool.num_labels}, offset));
    offset += 4 * pool.logits.data.size();
    tensors.push_back(manifest_entry("embeddings", {pool.n, pool.embeddings.cols}, offset));
    offset += 4 * pool.embeddings.data.size();
    if (pool.hidden_states) {
        tensors.push_back(manifest_entry(
            "hidden_states", {pool.n, pool.num_prompts, pool.hidden_states->dim2}, offset));
    }
    header["tensors"] = std::move(tensors);
    header["example_ids"] = pool.example_ids;
    if (pool.gold_labels) header["gold_labels"] = *pool.gold_labels;

    std::string out = envelope(pool_magic, header);
    put_values(out, pool.logits.data, "logits");
    put_values(out, pool.embeddings.data, "embeddings");
    if (pool.hidden_states) put_values(out, pool.hidden_states->data, "hidden_states");
    return out;
}

PoolDataset decode_pool(std::string_view bytes, const ReadOptions& options) {
    const Envelope env = open_envelope(bytes, pool_magic, options);
    const json& header = env.header;

    PoolDataset pool;
    pool.n = static_cast<std::size_t>(get_uint(header, "n"));
    pool.num_prompts = static_cast<std::size_t>(get_uint(header, "num_prompts"));
    pool.num_labels = static_cast<std::size_t>(get_uint(header, "num_labels"));
    const auto emb_dim = static_cast<std::size_t>(get_uint(header, "embedding_dim"));
    std::optional<std::size_t> hidden_dim;
    if (header.contains("hidden_dim")) hidden_dim = static_cast<std::size_t>(get_uint(header, "hidden_dim"));

    const std::vector<ManifestEntry> manifest = parse_manifest(header, env.payload, options);
    std::map<std::string, const ManifestEntry*> by_name;
    for (const ManifestEntry& e : manifest) by_name[e.name] = &e;

    const std::map<std::string, std::vector<std::size_t>> expected = [&] {
        std::map<std::string, std::vector<std::size_t>> m{
            {"logits", {pool.n, pool.num_prompts, pool.num_labels}},
            {"embeddings", {pool.n, emb_dim}},
        };
        if (hidden_dim) m["hidden_states"] = {pool.n, pool.num_prompts, *hidden_dim};
        return m;
    }();
    for (const ManifestEntry& e : manifest) {
        const auto it = expected.find(e.name);
        if (it == expected.end()) schema_error("unexpected tensor '" + e.name + "' in pool file");
        if (it->second != e.shape) schema_error("tensor '" + e.name + "' shape disagrees with header dimensions");
    }
    for (const auto& [name, shape] : expected) {
        if (!by_name.count(name)) schema_error("pool file is missing tensor '" + name + "'");
    }

    const auto ids_it = header.find("example_ids");
    if (ids_it == header.end() || !ids_it->is_array() || ids_it->size() != pool.n) {
        schema_error("'example_ids' must be an array of n strings");
    }
    for (const json& id : *ids_it) {
        if (!id.is_string()) schema_error("'example_ids' must contain strings");
        pool.example_ids.push_back(id.get<std::string>());
    }
    if (const auto gold_it = header.find("gold_labels"); gold_it != header.end()) {
        if (!gold_it->is_array() || gold_it->size() != pool.n) {
            schema_error("'gold_labels' must be an array of n integers");
        }
        std::vector<std::int64_t> gold;
        for (const json& y : *gold_it) {
            if (!y.is_number_integer()) schema_error("'gold_labels' must contain integers");
            gold.push_back(y.get<std::int64_t>());
        }
        pool.gold_labels = std::move(gold);
    }

    const ManifestEntry& lg = *by_name.at("logits");
    pool.logits = Tensor3(pool.n, pool.num_prompts, pool.num_labels);
    pool.logits.data = get_values(env.payload, lg.offset, lg.count);
    const ManifestEntry& emb = *by_name.at("embeddings");
    pool.embeddings = Matrix(pool.n, emb_dim);
    pool.embeddings.data = get_values(env.payload, emb.offset, emb.count);
    if (hidden_dim) {
        const ManifestEntry& hs = *by_name.at("hidden_states");
        Tensor3 states(pool.n, pool.num_prompts, *hidden_dim);
        states.data = get_values(env.payload, hs.offset, hs.count);
        pool.hidden_states = std::move(states);
    }
    validate_pool(pool);
    return pool;
}

std::string encode_tensors(const NamedTensorSet& set) {
    validate_tensor_set(set);
    ordered_json header;
    ordered_json tensors = ordered_json::array();
    std::uint64_t offset = 0;
    for (const NamedTensor& t : set.tensors) {
        tensors.push_back(manifest_entry(t.name, t.shape, offset));
        offset += 4 * t.values.size();
    }
    header["tensors"] = std::move(tensors);
    std::string out = envelope(tensor_magic, header);
    for (const NamedTensor& t : set.tensors) put_values(out, t.values, t.name);
    return out;
}

NamedTensorSet decode_tensors(std::string_view bytes, const ReadOptions& options) {
    const Envelope env = open_envelope(bytes, tensor_magic, options);
    NamedTensorSet set;
    for (const ManifestEntry& e : parse_manifest(env.header, env.payload, options)) {
        set.tensors.push_back({e.name, e.shape, get_values(env.payload, e.offset, e.count)});
    }
    validate_tensor_set(set);
    return set;
}

std::string read_file(const std::filesystem::path& path, std::uint64_t max_bytes) {
    std::error_code ec;
    const auto size = std::filesystem::file_size(path, ec);
    if (ec) throw Error(ErrorCode::io_failure, "cannot stat '" + path.string() + "': " + ec.message());
    if (size > max_bytes) throw Error(ErrorCode::oversize, "'" + path.string() + "' exceeds the size cap");
    std::ifstream in(path, std::ios::binary);
    if (!in) throw Error(ErrorCode::io_failure, "cannot open '" + path.string() + "'");
    std::string bytes(static_cast<std::size_t>(size), '\0');
    in.read(bytes.data(), static_cast<std::streamsize>(size));
    if (in.gcount() != static_cast<std::streamsize>(size)) {
        throw Error(ErrorCode::io_failure, "short read from '" + path.string() + "'");
    }
    return bytes;
}

void write_file_atomic(const std::filesystem::path& path, std::string_view bytes) {
    std::filesystem::path tmp = path;
    tmp += ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
        if (!out) throw Error(ErrorCode::io_failure, "cannot open '" + tmp.string() + "' for writing");
        out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
        if (!out) throw Error(ErrorCode::io_failure, "write to '" + tmp.string() + "' failed");
    }
    std::error_code ec;
    std::filesystem::rename(tmp, path, ec);
    if (ec) throw Error(ErrorCode::io_failure, "cannot move '" + tmp.string() + "' into place: " + ec.message());
}

PoolDataset read_pool(const std::filesystem::path& path, const ReadOptions& options) {
    return decode_pool(read_file(path, options.max_bytes), options);
}

void write_pool(const PoolDataset& pool, const std::filesystem::path& path) {
    write_file_atomic(path, encode_pool(pool));
}

NamedTensorSet read_tensors(const std::filesystem::path& path, const ReadOptions& options) {
    return decode_tensors(read_file(path, options.max_bytes), options);
}

void write_tensors(const NamedTensorSet& set, const std::filesystem::path& path) {
    write_file_atomic(path, encode_tensors(set));
}

SelectionRecord make_selection_record(const Selection& selection, const PoolDataset& pool) {
    validate_selection(selection, pool.n);
    SelectionRecord record{selection, pool.n, {}};
    for (std::size_t idx : selection.indices) record.example_ids.push_back(pool.example_ids[idx]);
    return record;
}

std::string encode_selection(const SelectionRecord& record) {
    validate_selection(record.selection, record.pool_size);
    ordered_json doc;
    doc["algorithm"] = std::string(to_string(record.selection.algorithm));
    doc["seed"] = record.selection.seed;
    doc["budget"] = record.selection.indices.size();
    doc["pool_size"] = record.pool_size;
    doc["indices"] = record.selection.indices;
    doc["example_ids"] = record.example_ids;
    if (record.selection.score) {
        doc["score"] = *record.selection.score;
    } else {
        doc["score"] = nullptr;
    }
    return dump_header(doc) + "\n";
}

SelectionRecord decode_selection(std::string_view text) {
    const json doc = json::parse(text.begin(), text.end(), nullptr, false);
    if (doc.is_discarded() || !doc.is_object()) schema_error("selection file is not a JSON object");

    SelectionRecord record;
    const auto algo_it = doc.find("algorithm");
    if (algo_it == doc.end() || !algo_it->is_string()) schema_error("selection needs an 'algorithm' string");
    try {
        record.selection.algorithm = parse_algorithm(algo_it->get<std::string>());
    } catch (const Error& e) {
        schema_error(e.what());
    }
    record.selection.seed = get_uint(doc, "seed");
    const std::uint64_t budget = get_uint(doc, "budget");
    record.pool_size = static_cast<std::size_t>(get_uint(doc, "pool_size"));

    const auto idx_it = doc.find("indices");
    if (idx_it == doc.end() || !idx_it->is_array()) schema_error("selection needs an 'indices' array");
    std::set<std::uint64_t> seen;
    for (const json& v : *idx_it) {
        if (!v.is_number_unsigned()) schema_error("indices must be non-negative integers");
        const auto idx = v.get<std::uint64_t>();
        if (idx >= record.pool_size) {
            schema_error("index " + std::to_string(idx) + " outside declared pool size " +
                         std::to_string(record.pool_size));
        }
        if (!seen.insert(idx).second) schema_error("index " + std::to_string(idx) + " appears twice");
        record.selection.indices.push_back(static_cast<std::size_t>(idx));
    }
    if (budget != record.selection.indices.size()) schema_error("'budget' disagrees with the number of indices");

    const auto ids_it = doc.find("example_ids");
    if (ids_it == doc.end() || !ids_it->is_array() || ids_it->size() != budget) {
        schema_error("'example_ids' must list one id per index");
    }
    for (const json& id : *ids_it) {
        if (!id.is_string()) schema_error("'example_ids' must contain strings");
        record.example_ids.push_back(id.get<std::string>());
    }
    const auto score_it = doc.find("score");
    if (score_it != doc.end() && !score_it->is_null()) {
        if (!score_it->is_number()) schema_error("'score' must be a number or null");
        record.selection.score = score_it->get<double>();
    }
    return record;
}

void write_selection(const SelectionRecord& record, const std::filesystem::path& path) {
    write_file_atomic(path, encode_selection(record));
}

SelectionRecord read_selection(const std::filesystem::path& path) {
    return decode_selection(read_file(path));
}

nlohmann::ordered_json metrics_report_json(const MetricsReport& report) {
    ordered_json doc;
    doc["algorithm"] = std::string(to_string(report.algorithm));
    doc["seed"] = report.seed;
    doc["budget"] = report.budget;
    doc["diversity"] = report.diversity;
    doc["representativeness"] = report.representativeness;
    if (report.label_entropy) {
        doc["label_entropy_nats"] = *report.label_entropy;
        doc["label_entropy_x100"] = *report.label_entropy_x100();
    } else {
        doc["label_entropy_nats"] = nullptr;
        doc["label_entropy_x100"] = nullptr;
    }
    return doc;
}

Tensor3 tensor3_from(const NamedTensorSet& set, const std::string& name) {
    const NamedTensor* t = set.find(name);
    if (t == nullptr) schema_error("tensor '" + name + "' not found");
    if (t->shape.size() != 3) schema_error("tensor '" + name + "' must have rank 3");
    Tensor3 out(t->shape[0], t->shape[1], t->shape[2]);
    out.data = t->values;
    return out;
}

NamedTensor tensor_from_matrix(const std::string& name, const Matrix& m) {
    return NamedTensor{name, {m.rows, m.cols}, m.data};
}

}  // namespace meal
