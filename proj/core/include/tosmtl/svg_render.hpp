#pragma once

#include <optional>
#include <string>
#include <vector>

#include "tosmtl/gradcam.hpp"
#include "tosmtl/strain_types.hpp"
#include "tosmtl/surface.hpp"

namespace tosmtl {

struct CurveStyle {
    std::string label;
    std::string color;  // SVG stroke color
};

// Strain heatmap (symmetric diverging colormap over [-0.2, +0.2], blue =
// contraction) with up to 4 TOS step-curves and an optional Grad-CAM opacity
// overlay. Byte output is deterministic for fixed inputs.
std::string render_strain_svg(const StrainMatrix& m,
                              const std::vector<std::pair<TosCurve, CurveStyle>>& curves,
                              const GradCamMap* overlay = nullptr,
                              const std::string& title = "");

void emit_svg_heatmap(const StrainMatrix& m,
                      const std::vector<std::pair<TosCurve, CurveStyle>>& curves,
                      const GradCamMap* overlay, const std::string& path,
                      const std::string& title = "");

// Unrolled-cylinder view of a TOS surface grid.
std::string render_surface_svg(const SurfaceGrid& grid, const std::string& title = "");
void emit_svg_surface(const SurfaceGrid& grid, const std::string& path,
                      const std::string& title = "");

// Diverging strain color, exposed for tests: v in [-0.2, 0.2] clamped,
// negative blue, zero near-white, positive red. Returns "#RRGGBB".
std::string strain_color(double v);

}  // namespace tosmtl
