#pragma once

#include <vector>

#include <json.hpp>

#include "tosmtl/strain_types.hpp"

namespace tosmtl {

struct SurfaceGridConfig {
    std::size_t angular_resolution = 72;
    std::size_t axial_resolution = 32;
    // Ascending z in [0,1]: apical 0.0, mid 0.33 / 0.66, basal 1.0.
    std::vector<double> slice_z = {0.0, 0.33, 0.66, 1.0};
};

// Idealized cylinder: sector s sits at angle 2*pi*s/n_sectors; values are
// circularly interpolated in angle and linearly in z between bracketing
// slices, clamping outside the slice range.
struct SurfaceGrid {
    std::vector<double> angles;  // radians, length = angular resolution
    std::vector<double> zs;      // length = axial resolution
    std::vector<double> values;  // row-major [z][angle], TOS ms

    double at(std::size_t zi, std::size_t ai) const { return values[zi * angles.size() + ai]; }
};

// slices ordered to match cfg.slice_z (ascending z). All curves must share
// the sector count; at least 2 slices required.
SurfaceGrid surface_map(const std::vector<TosCurve>& slices, const SurfaceGridConfig& cfg);

// Value of the continuous surface at (angle, z); the grid is built from this.
double surface_sample(const std::vector<TosCurve>& slices, const SurfaceGridConfig& cfg,
                      double angle, double z);

nlohmann::ordered_json surface_to_json(const SurfaceGrid& grid);

}  // namespace tosmtl
