#include "tosmtl/surface.hpp"

#include <algorithm>
#include <cmath>

namespace tosmtl {

using nlohmann::ordered_json;

namespace {

// Circular interpolation along the sector ring at a fixed slice.
double ring_sample(const TosCurve& curve, double angle) {
    const std::size_t n = curve.n_sectors();
    const double two_pi = 2.0 * M_PI;
    double a = std::fmod(angle, two_pi);
    if (a < 0.0) a += two_pi;
    const double x = a / two_pi * static_cast<double>(n);  // sector coordinate
    const double f = std::floor(x);
    const std::size_t s0 = static_cast<std::size_t>(f) % n;
    const std::size_t s1 = (s0 + 1) % n;
    const double w = x - f;
    return curve.tos_ms[s0] * (1.0 - w) + curve.tos_ms[s1] * w;
}

}  // namespace

double surface_sample(const std::vector<TosCurve>& slices, const SurfaceGridConfig& cfg,
                      double angle, double z) {
    const auto& zp = cfg.slice_z;
    if (z <= zp.front()) return ring_sample(slices.front(), angle);
    if (z >= zp.back()) return ring_sample(slices.back(), angle);
    std::size_t hi = 1;
    while (zp[hi] < z) ++hi;
    const std::size_t lo = hi - 1;
    const double w = (z - zp[lo]) / (zp[hi] - zp[lo]);
    return ring_sample(slices[lo], angle) * (1.0 - w) + ring_sample(slices[hi], angle) * w;
}

SurfaceGrid surface_map(const std::vector<TosCurve>& slices, const SurfaceGridConfig& cfg) {
    if (slices.size() < 2) throw ConfigError("surface_map: need at least 2 slices");
    if (slices.size() != cfg.slice_z.size()) {
        throw ConfigError("surface_map: " + std::to_string(slices.size()) + " slices but " +
                          std::to_string(cfg.slice_z.size()) + " declared z positions");
    }
    if (!std::is_sorted(cfg.slice_z.begin(), cfg.slice_z.end()) ||
        std::adjacent_find(cfg.slice_z.begin(), cfg.slice_z.end()) != cfg.slice_z.end()) {
        throw ConfigError("surface_map: slice z positions must be strictly increasing");
    }
    const std::size_t n = slices[0].n_sectors();
    for (const auto& s : slices) {
        if (s.n_sectors() != n) throw ConfigError("surface_map: sector counts differ across slices");
    }
    if (cfg.angular_resolution == 0 || cfg.axial_resolution < 2) {
        throw ConfigError("surface_map: grid resolution too small");
    }

    SurfaceGrid grid;
    grid.angles.resize(cfg.angular_resolution);
    for (std::size_t a = 0; a < cfg.angular_resolution; ++a) {
        grid.angles[a] = 2.0 * M_PI * static_cast<double>(a) /
                         static_cast<double>(cfg.angular_resolution);
    }
    grid.zs.resize(cfg.axial_resolution);
    for (std::size_t i = 0; i < cfg.axial_resolution; ++i) {
        grid.zs[i] = static_cast<double>(i) / static_cast<double>(cfg.axial_resolution - 1);
    }
    grid.values.resize(cfg.angular_resolution * cfg.axial_resolution);
    for (std::size_t zi = 0; zi < cfg.axial_resolution; ++zi) {
        for (std::size_t ai = 0; ai < cfg.angular_resolution; ++ai) {
            grid.values[zi * cfg.angular_resolution + ai] =
                surface_sample(slices, cfg, grid.angles[ai], grid.zs[zi]);
        }
    }
    return grid;
}

ordered_json surface_to_json(const SurfaceGrid& grid) {
    return ordered_json{{"angles", grid.angles}, {"zs", grid.zs}, {"values", grid.values}};
}

}  // namespace tosmtl
