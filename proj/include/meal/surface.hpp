#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "meal/ensemble.hpp"

namespace meal {

/// theta_p + a * (theta_f - theta_p) + b * (theta_s - theta_p), evaluated as
/// (1 - a - b) * theta_p + a * theta_f + b * theta_s so the three anchors are
/// reproduced exactly at (0,0), (1,0) and (0,1).
NamedTensorSet interpolate(const NamedTensorSet& theta_p, const NamedTensorSet& theta_f,
                           const NamedTensorSet& theta_s, double a, double b);

struct AxisRange {
    double lo = -0.5;
    double hi = 1.5;
};

inline constexpr std::size_t default_grid_count = 16;

/// `count` evenly spaced values from lo to hi inclusive; the last equals hi.
std::vector<double> linspace(AxisRange range, std::size_t count);

struct GridPoint {
    std::size_t a_index = 0;
    std::size_t b_index = 0;
    double a = 0.0;
    double b = 0.0;
};

/// Row-major (a-major) lattice of interpolation coordinates.
std::vector<GridPoint> grid_points(std::size_t a_count = default_grid_count,
                                   std::size_t b_count = default_grid_count,
                                   AxisRange a_range = {}, AxisRange b_range = {});

/// File stem for the checkpoint at a lattice position: grid_a{ia}_b{ib}.
std::string grid_checkpoint_name(std::size_t a_index, std::size_t b_index);

struct SurfaceSample {
    double a = 0.0;
    double b = 0.0;
    std::optional<double> value;
};

struct SurfaceGrid {
    std::vector<double> a_values;
    std::vector<double> b_values;
    /// a-major: cell (ia, ib) lives at ia * b_values.size() + ib.
    std::vector<std::optional<double>> cells;
    std::string theta_p;
    std::string theta_f;
    std::string theta_s;

    const std::optional<double>& cell(std::size_t ia, std::size_t ib) const {
        return cells[ia * b_values.size() + ib];
    }
};

/// Places externally evaluated samples on the lattice spanned by their
/// distinct a and b values. Lattice points without a sample stay empty.
SurfaceGrid assemble_grid(std::span<const SurfaceSample> samples);

/// CSV with header "a,b,value"; empty cells are written as NA.
std::string grid_to_csv(const SurfaceGrid& grid);

/// Reads a CSV with a header containing columns a, b and value (any order,
/// extra columns ignored). NA or an empty field marks a missing value.
std::vector<SurfaceSample> parse_surface_csv(std::string_view text);

}  // namespace meal
