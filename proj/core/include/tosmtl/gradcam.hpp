#pragma once

#include <string>

#include "tosmtl/layers.hpp"
#include "tosmtl/model.hpp"
#include "tosmtl/strain_types.hpp"

namespace tosmtl {

struct GradCamMap {
    std::size_t n_sectors = 0;
    std::size_t n_frames = 0;
    std::vector<double> values;  // row-major [sector][frame], in [0,1]
    std::size_t target_sector = 0;
    std::string target_layer;

    double at(std::size_t s, std::size_t f) const { return values[s * n_frames + f]; }
};

// Circular midpoint of the longest contiguous circular LMA run; ties broken
// by lowest start index, even-length runs take the lower-middle sector.
// Throws ConfigError when no sector is LMA (caller must supply an index).
std::size_t central_sector(const SectorLabels& labels);

// Grad-CAM over a trunk + head pair: channel weights are spatial means of
// d head_output[target_index] / d A for feature maps A at `target_layer`
// inside the trunk; map = ReLU(sum_k alpha_k A_k), bilinearly upsampled
// (circular along sectors), max-normalized (zero map stays zero).
GradCamMap gradcam_over(nn::Sequential& trunk, nn::Sequential& head, const nn::Tensor& input,
                        std::size_t target_index, const std::string& target_layer,
                        std::size_t out_sectors, std::size_t out_frames);

// Regression-output Grad-CAM on the MTL model; target layer defaults to the
// last joint conv layer.
GradCamMap gradcam(MtlModel& model, const StrainMatrix& prepared, std::size_t target_sector,
                   const std::string& target_layer = "");

// Fraction of total map mass inside a (circular) sector window x frame window.
// sector window: [sector_begin, sector_begin + sector_count) mod n_sectors;
// frame window: [frame_begin, frame_end).
double attention_mass(const GradCamMap& map, std::size_t sector_begin, std::size_t sector_count,
                      std::size_t frame_begin, std::size_t frame_end);

// Bilinear upsampling used by gradcam_over; exposed for testing. The sector
// (row) axis is circular, the time axis clamps at its ends.
std::vector<double> upsample_bilinear_circular(const std::vector<double>& src,
                                               std::size_t src_h, std::size_t src_w,
                                               std::size_t dst_h, std::size_t dst_w);

}  // namespace tosmtl
