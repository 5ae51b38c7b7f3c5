#include "meal/surface.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <utility>

namespace meal {
namespace {

std::string_view trim(std::string_view s) {
    while (!s.empty() && (s.front() == ' ' || s.front() == '\t' || s.front() == '\r')) s.remove_prefix(1);
    while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
    return s;
}

std::vector<std::string_view> split_fields(std::string_view line) {
    std::vector<std::string_view> fields;
    std::size_t start = 0;
    while (true) {
        const std::size_t comma = line.find(',', start);
        fields.push_back(trim(line.substr(start, comma - start)));
        if (comma == std::string_view::npos) break;
        start = comma + 1;
    }
    return fields;
}

double parse_number(std::string_view field, std::size_t line_no) {
    double value = 0.0;
    const auto res = std::from_chars(field.data(), field.data() + field.size(), value);
    if (res.ec != std::errc() || res.ptr != field.data() + field.size()) {
        throw Error(ErrorCode::schema_violation, "surface csv line " + std::to_string(line_no) +
                                                     ": cannot parse '" + std::string(field) + "'");
    }
    return value;
}

}  // namespace

NamedTensorSet interpolate(const NamedTensorSet& theta_p, const NamedTensorSet& theta_f,
                           const NamedTensorSet& theta_s, double a, double b) {
    validate_tensor_set(theta_p);
    require_same_schema(theta_p, theta_f);
    require_same_schema(theta_p, theta_s);

    const double w = 1.0 - a - b;
    NamedTensorSet out = theta_p;
    for (NamedTensor& tensor : out.tensors) {
        const std::vector<double>& pv = theta_p.find(tensor.name)->values;
        const std::vector<double>& fv = theta_f.find(tensor.name)->values;
        const std::vector<double>& sv = theta_s.find(tensor.name)->values;
        for (std::size_t e = 0; e < tensor.values.size(); ++e) {
            tensor.values[e] = w * pv[e] + a * fv[e] + b * sv[e];
        }
    }
    return out;
}

std::vector<double> linspace(AxisRange range, std::size_t count) {
    if (count < 2) throw Error(ErrorCode::invalid_argument, "grid axis needs at least 2 points");
    if (!std::isfinite(range.lo) || !std::isfinite(range.hi) || !(range.lo < range.hi)) {
        throw Error(ErrorCode::invalid_argument, "grid axis range must satisfy lo < hi");
    }
    std::vector<double> out(count);
    const double step = (range.hi - range.lo) / static_cast<double>(count - 1);
    for (std::size_t i = 0; i + 1 < count; ++i) out[i] = range.lo + static_cast<double>(i) * step;
    out[count - 1] = range.hi;
    return out;
}

std::vector<GridPoint> grid_points(std::size_t a_count, std::size_t b_count, AxisRange a_range,
                                   AxisRange b_range) {
    const std::vector<double> as = linspace(a_range, a_count);
    const std::vector<double> bs = linspace(b_range, b_count);
    std::vector<GridPoint> out;
    out.reserve(a_count * b_count);
    for (std::size_t ia = 0; ia < a_count; ++ia) {
        for (std::size_t ib = 0; ib < b_count; ++ib) out.push_back({ia, ib, as[ia], bs[ib]});
    }
    return out;
}

std::string grid_checkpoint_name(std::size_t a_index, std::size_t b_index) {
    return "grid_a" + std::to_string(a_index) + "_b" + std::to_string(b_index);
}

SurfaceGrid assemble_grid(std::span<const SurfaceSample> samples) {
    SurfaceGrid grid;
    for (const SurfaceSample& s : samples) {
        if (!std::isfinite(s.a) || !std::isfinite(s.b)) {
            throw Error(ErrorCode::schema_violation, "surface coordinates must be finite");
        }
        if (s.value && !std::isfinite(*s.value)) {
            throw Error(ErrorCode::non_finite, "surface value at (" + format_double(s.a) + "," +
                                                   format_double(s.b) + ") is not finite");
        }
        grid.a_values.push_back(s.a);
        grid.b_values.push_back(s.b);
    }
    for (auto* axis : {&grid.a_values, &grid.b_values}) {
        std::sort(axis->begin(), axis->end());
        axis->erase(std::unique(axis->begin(), axis->end()), axis->end());
    }

    grid.cells.assign(grid.a_values.size() * grid.b_values.size(), std::nullopt);
    std::vector<bool> seen(grid.cells.size(), false);
    for (const SurfaceSample& s : samples) {
        const auto ia = static_cast<std::size_t>(
            std::lower_bound(grid.a_values.begin(), grid.a_values.end(), s.a) - grid.a_values.begin());
        const auto ib = static_cast<std::size_t>(
            std::lower_bound(grid.b_values.begin(), grid.b_values.end(), s.b) - grid.b_values.begin());
        const std::size_t slot = ia * grid.b_values.size() + ib;
        if (seen[slot]) {
            throw Error(ErrorCode::schema_violation, "duplicate surface entry at (" +
                                                         format_double(s.a) + "," +
                                                         format_double(s.b) + ")");
        }
        seen[slot] = true;
        grid.cells[slot] = s.value;
    }
    return grid;
}

std::string grid_to_csv(const SurfaceGrid& grid) {
    std::string out = "a,b,value\n";
    for (std::size_t ia = 0; ia < grid.a_values.size(); ++ia) {
        for (std::size_t ib = 0; ib < grid.b_values.size(); ++ib) {
            const auto& v = grid.cell(ia, ib);
            out += format_double(grid.a_values[ia]);
            out += ',';
            out += format_double(grid.b_values[ib]);
            out += ',';
            out += v ? format_double(*v) : std::string("NA");
            out += '\n';
        }
    }
    return out;
}

std::vector<SurfaceSample> parse_surface_csv(std::string_view text) {
    std::vector<SurfaceSample> out;
    std::size_t col_a = 0, col_b = 0, col_v = 0;
    bool have_header = false;
    std::size_t line_no = 0;
    std::size_t pos = 0;
    while (pos < text.size()) {
        std::size_t eol = text.find('\n', pos);
        if (eol == std::string_view::npos) eol = text.size();
        const std::string_view line = trim(text.substr(pos, eol - pos));
        pos = eol + 1;
        ++line_no;
        if (line.empty()) continue;

        const std::vector<std::string_view> fields = split_fields(line);
        if (!have_header) {
            std::map<std::string_view, std::size_t> index;
            for (std::size_t c = 0; c < fields.size(); ++c) index.emplace(fields[c], c);
            if (!index.count("a") || !index.count("b") || !index.count("value")) {
                throw Error(ErrorCode::schema_violation,
                            "surface csv header must name columns a, b and value");
            }
            col_a = index["a"];
            col_b = index["b"];
            col_v = index["value"];
            have_header = true;
            continue;
        }
        const std::size_t needed = std::max({col_a, col_b, col_v}) + 1;
        if (fields.size() < needed) {
            throw Error(ErrorCode::schema_violation,
                        "surface csv line " + std::to_string(line_no) + " has too few fields");
        }
        SurfaceSample sample{parse_number(fields[col_a], line_no),
                             parse_number(fields[col_b], line_no), std::nullopt};
        if (fields[col_v] != "NA" && !fields[col_v].empty()) {
            sample.value = parse_number(fields[col_v], line_no);
        }
        out.push_back(sample);
    }
    if (!have_header) throw Error(ErrorCode::schema_violation, "surface csv is empty");
    return out;
}

}  // namespace meal
