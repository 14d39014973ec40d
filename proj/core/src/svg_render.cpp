#include "tosmtl/svg_render.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace tosmtl {

namespace {

constexpr double kStrainLimit = 0.2;
constexpr int kCell = 12;      // px per matrix cell
constexpr int kMarginL = 46;
constexpr int kMarginT = 28;
constexpr int kMarginR = 14;
constexpr int kMarginB = 34;

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof(buf), "%.6g", v);
    return buf;
}

std::string rgb(int r, int g, int b) {
    char buf[8];
    std::snprintf(buf, sizeof(buf), "#%02X%02X%02X", r, g, b);
    return buf;
}

int lerp_channel(int a, int b, double t) {
    return static_cast<int>(std::lround(a + (b - a) * t));
}

// Generic blue-white-red diverging map over t in [0,1].
std::string diverging(double t) {
    t = std::clamp(t, 0.0, 1.0);
    const int blue[3] = {33, 102, 172};
    const int white[3] = {247, 247, 247};
    const int red[3] = {178, 24, 43};
    if (t < 0.5) {
        const double u = t / 0.5;
        return rgb(lerp_channel(blue[0], white[0], u), lerp_channel(blue[1], white[1], u),
                   lerp_channel(blue[2], white[2], u));
    }
    const double u = (t - 0.5) / 0.5;
    return rgb(lerp_channel(white[0], red[0], u), lerp_channel(white[1], red[1], u),
               lerp_channel(white[2], red[2], u));
}

void svg_header(std::ostringstream& out, int width, int height, const std::string& title) {
    out << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
        << "<svg xmlns=\"http://www.w3.org/2000/svg\" version=\"1.1\" width=\"" << width
        << "\" height=\"" << height << "\" viewBox=\"0 0 " << width << " " << height << "\">\n";
    if (!title.empty()) {
        out << "<text x=\"" << kMarginL << "\" y=\"18\" font-family=\"monospace\" "
            << "font-size=\"12\">" << title << "</text>\n";
    }
}

void write_file(const std::string& svg, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw IoError("cannot open for writing: " + path);
    out << svg;
    if (!out) throw IoError("write failed: " + path);
}

}  // namespace

std::string strain_color(double v) {
    // map [-limit, +limit] to [0,1]; blue = contraction (negative)
    const double t = (std::clamp(v, -kStrainLimit, kStrainLimit) + kStrainLimit) /
                     (2.0 * kStrainLimit);
    return diverging(t);
}

std::string render_strain_svg(const StrainMatrix& m,
                              const std::vector<std::pair<TosCurve, CurveStyle>>& curves,
                              const GradCamMap* overlay, const std::string& title) {
    if (curves.size() > 4) throw ConfigError("render_strain_svg: at most 4 TOS curves");
    if (overlay && (overlay->n_sectors != m.n_sectors || overlay->n_frames != m.n_frames)) {
        throw ConfigError("render_strain_svg: overlay shape mismatch");
    }
    const int grid_w = static_cast<int>(m.n_frames) * kCell;
    const int grid_h = static_cast<int>(m.n_sectors) * kCell;
    const int width = kMarginL + grid_w + kMarginR;
    const int height = kMarginT + grid_h + kMarginB;

    std::ostringstream out;
    svg_header(out, width, height, title);

    for (std::size_t s = 0; s < m.n_sectors; ++s) {
        for (std::size_t f = 0; f < m.n_frames; ++f) {
            const int x = kMarginL + static_cast<int>(f) * kCell;
            const int y = kMarginT + static_cast<int>(s) * kCell;
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
                << "\" height=\"" << kCell << "\" fill=\"" << strain_color(m.at(s, f))
                << "\"/>\n";
        }
    }

    if (overlay) {
        for (std::size_t s = 0; s < m.n_sectors; ++s) {
            for (std::size_t f = 0; f < m.n_frames; ++f) {
                const double v = overlay->at(s, f);
                if (v <= 0.0) continue;
                const int x = kMarginL + static_cast<int>(f) * kCell;
                const int y = kMarginT + static_cast<int>(s) * kCell;
                out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << kCell
                    << "\" height=\"" << kCell << "\" fill=\"#FFD700\" fill-opacity=\""
                    << fmt(0.6 * v) << "\"/>\n";
            }
        }
    }

    // TOS curves as step polylines: x in cell units = tos / frame period.
    for (const auto& [curve, style] : curves) {
        if (curve.n_sectors() != m.n_sectors) {
            throw ConfigError("render_strain_svg: curve sector count mismatch");
        }
        std::ostringstream pts;
        for (std::size_t s = 0; s < m.n_sectors; ++s) {
            const double cx = kMarginL + curve.tos_ms[s] / m.frame_period_ms * kCell;
            const double y0 = kMarginT + static_cast<double>(s) * kCell;
            const double y1 = y0 + kCell;
            pts << fmt(cx) << "," << fmt(y0) << " " << fmt(cx) << "," << fmt(y1) << " ";
        }
        out << "<polyline points=\"" << pts.str() << "\" fill=\"none\" stroke=\"" << style.color
            << "\" stroke-width=\"2\"/>\n";
    }

    // Axes labels
    out << "<text x=\"" << kMarginL << "\" y=\"" << (kMarginT + grid_h + 22)
        << "\" font-family=\"monospace\" font-size=\"11\">frame (" << fmt(m.frame_period_ms)
        << " ms each)</text>\n";
    out << "<text x=\"8\" y=\"" << kMarginT + 10
        << "\" font-family=\"monospace\" font-size=\"11\">sector</text>\n";

    // Legend for curves
    int ly = kMarginT + 12;
    for (const auto& [curve, style] : curves) {
        (void)curve;
        const int lx = kMarginL + grid_w - 4;
        out << "<text x=\"" << lx << "\" y=\"" << ly << "\" text-anchor=\"end\" "
            << "font-family=\"monospace\" font-size=\"11\" fill=\"" << style.color << "\">"
            << style.label << "</text>\n";
        ly += 14;
    }

    out << "</svg>\n";
    return out.str();
}

void emit_svg_heatmap(const StrainMatrix& m,
                      const std::vector<std::pair<TosCurve, CurveStyle>>& curves,
                      const GradCamMap* overlay, const std::string& path,
                      const std::string& title) {
    write_file(render_strain_svg(m, curves, overlay, title), path);
}

std::string render_surface_svg(const SurfaceGrid& grid, const std::string& title) {
    const std::size_t na = grid.angles.size(), nz = grid.zs.size();
    const int cell = 10;
    const int grid_w = static_cast<int>(na) * cell;
    const int grid_h = static_cast<int>(nz) * cell;
    const int width = kMarginL + grid_w + kMarginR;
    const int height = kMarginT + grid_h + kMarginB;

    double lo = grid.values[0], hi = grid.values[0];
    for (double v : grid.values) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    const double span = hi > lo ? hi - lo : 1.0;

    std::ostringstream out;
    svg_header(out, width, height, title);
    // basal (z=1) on top, apical at the bottom
    for (std::size_t zi = 0; zi < nz; ++zi) {
        const std::size_t row = nz - 1 - zi;
        for (std::size_t ai = 0; ai < na; ++ai) {
            const double t = (grid.at(zi, ai) - lo) / span;
            const int x = kMarginL + static_cast<int>(ai) * cell;
            const int y = kMarginT + static_cast<int>(row) * cell;
            out << "<rect x=\"" << x << "\" y=\"" << y << "\" width=\"" << cell
                << "\" height=\"" << cell << "\" fill=\"" << diverging(t) << "\"/>\n";
        }
    }
    out << "<text x=\"" << kMarginL << "\" y=\"" << (kMarginT + grid_h + 22)
        << "\" font-family=\"monospace\" font-size=\"11\">circumference; TOS "
        << fmt(lo) << "-" << fmt(hi) << " ms (blue-red)</text>\n";
    out << "<text x=\"8\" y=\"" << kMarginT + 10
        << "\" font-family=\"monospace\" font-size=\"11\">base</text>\n";
    out << "<text x=\"8\" y=\"" << kMarginT + grid_h
        << "\" font-family=\"monospace\" font-size=\"11\">apex</text>\n";
    out << "</svg>\n";
    return out.str();
}

void emit_svg_surface(const SurfaceGrid& grid, const std::string& path, const std::string& title) {
    write_file(render_surface_svg(grid, title), path);
}

}  // namespace tosmtl
