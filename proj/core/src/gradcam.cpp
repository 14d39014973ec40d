#include "tosmtl/gradcam.hpp"

#include <algorithm>
#include <cmath>

namespace tosmtl {

std::size_t central_sector(const SectorLabels& labels) {
    const std::size_t n = labels.n_sectors();
    std::size_t lma_count = 0;
    for (std::size_t s = 0; s < n; ++s) lma_count += labels.is_lma(s) ? 1 : 0;
    if (lma_count == 0) {
        throw ConfigError("central_sector: no LMA sector; supply an explicit sector index");
    }
    if (lma_count == n) return (n - 1) / 2;  // whole ring: run starts at 0

    std::size_t best_start = 0, best_len = 0;
    for (std::size_t s = 0; s < n; ++s) {
        const bool run_start = labels.is_lma(s) && !labels.is_lma((s + n - 1) % n);
        if (!run_start) continue;
        std::size_t len = 0;
        while (len < n && labels.is_lma((s + len) % n)) ++len;
        if (len > best_len) {  // ties keep the lowest start (scan order)
            best_len = len;
            best_start = s;
        }
    }
    return (best_start + (best_len - 1) / 2) % n;
}

std::vector<double> upsample_bilinear_circular(const std::vector<double>& src,
                                               std::size_t src_h, std::size_t src_w,
                                               std::size_t dst_h, std::size_t dst_w) {
    std::vector<double> dst(dst_h * dst_w, 0.0);
    const double sy = static_cast<double>(src_h) / static_cast<double>(dst_h);
    const double sx = static_cast<double>(src_w) / static_cast<double>(dst_w);
    for (std::size_t y = 0; y < dst_h; ++y) {
        // align_corners=false sample positions
        double src_y = (static_cast<double>(y) + 0.5) * sy - 0.5;
        // circular rows
        double fy = std::floor(src_y);
        double wy = src_y - fy;
        std::int64_t y0 = static_cast<std::int64_t>(fy) % static_cast<std::int64_t>(src_h);
        if (y0 < 0) y0 += static_cast<std::int64_t>(src_h);
        const std::size_t r0 = static_cast<std::size_t>(y0);
        const std::size_t r1 = (r0 + 1) % src_h;
        for (std::size_t x = 0; x < dst_w; ++x) {
            double src_x = (static_cast<double>(x) + 0.5) * sx - 0.5;
            src_x = std::clamp(src_x, 0.0, static_cast<double>(src_w - 1));
            const double fx = std::floor(src_x);
            const double wx = src_x - fx;
            const std::size_t c0 = static_cast<std::size_t>(fx);
            const std::size_t c1 = std::min(c0 + 1, src_w - 1);
            dst[y * dst_w + x] = (1.0 - wy) * ((1.0 - wx) * src[r0 * src_w + c0] +
                                               wx * src[r0 * src_w + c1]) +
                                 wy * ((1.0 - wx) * src[r1 * src_w + c0] +
                                       wx * src[r1 * src_w + c1]);
        }
    }
    return dst;
}

GradCamMap gradcam_over(nn::Sequential& trunk, nn::Sequential& head, const nn::Tensor& input,
                        std::size_t target_index, const std::string& target_layer,
                        std::size_t out_sectors, std::size_t out_frames) {
    if (input.shape[0] != 1) throw ConfigError("gradcam: single-sample input expected");

    nn::Tensor activation;
    nn::Tensor features = trunk.forward_capture(input, nn::Mode::eval, target_layer, &activation);
    nn::Tensor output = head.forward(features, nn::Mode::eval);
    if (target_index >= output.size()) {
        throw ConfigError("gradcam: target index out of range");
    }

    nn::Tensor one_hot(output.shape);
    one_hot.data[target_index] = 1.0;
    nn::Tensor grad_features = head.backward(one_hot);
    nn::Tensor grad_activation = trunk.backward_to(target_layer, grad_features);

    // activation: [1, C, H, W]
    const std::size_t C = activation.shape[1], H = activation.shape[2], W = activation.shape[3];
    std::vector<double> raw(H * W, 0.0);
    for (std::size_t c = 0; c < C; ++c) {
        double alpha = 0.0;
        const double* g = &grad_activation.data[c * H * W];
        for (std::size_t i = 0; i < H * W; ++i) alpha += g[i];
        alpha /= static_cast<double>(H * W);
        const double* a = &activation.data[c * H * W];
        for (std::size_t i = 0; i < H * W; ++i) raw[i] += alpha * a[i];
    }
    for (double& v : raw) v = std::max(v, 0.0);

    GradCamMap map;
    map.n_sectors = out_sectors;
    map.n_frames = out_frames;
    map.target_sector = target_index;
    map.target_layer = target_layer;
    map.values = upsample_bilinear_circular(raw, H, W, out_sectors, out_frames);

    const double mx = *std::max_element(map.values.begin(), map.values.end());
    if (mx > 0.0) {
        for (double& v : map.values) v /= mx;
    }
    return map;
}

GradCamMap gradcam(MtlModel& model, const StrainMatrix& prepared, std::size_t target_sector,
                   const std::string& target_layer) {
    const auto& cfg = model.config();
    if (target_sector >= cfg.n_sectors) {
        throw ConfigError("gradcam: target sector " + std::to_string(target_sector) +
                          " out of range");
    }
    const std::string layer = target_layer.empty() ? model.last_joint_conv() : target_layer;
    nn::Tensor input = MtlModel::batch_input({&prepared});
    auto map = gradcam_over(model.joint(), model.regression_head(), input, target_sector, layer,
                            cfg.n_sectors, cfg.n_frames);
    map.target_sector = target_sector;
    return map;
}

double attention_mass(const GradCamMap& map, std::size_t sector_begin, std::size_t sector_count,
                      std::size_t frame_begin, std::size_t frame_end) {
    if (sector_count > map.n_sectors || frame_end > map.n_frames || frame_begin > frame_end) {
        throw ConfigError("attention_mass: region out of bounds");
    }
    double total = 0.0;
    for (double v : map.values) total += v;
    if (total == 0.0) return 0.0;

    double inside = 0.0;
    for (std::size_t i = 0; i < sector_count; ++i) {
        const std::size_t s = (sector_begin + i) % map.n_sectors;
        for (std::size_t f = frame_begin; f < frame_end; ++f) inside += map.at(s, f);
    }
    return inside / total;
}

}  // namespace tosmtl
