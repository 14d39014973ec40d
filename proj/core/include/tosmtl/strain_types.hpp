#pragma once

#include <array>
#include <cstdint>
#include <string>
#include <vector>

#include "tosmtl/errors.hpp"

namespace tosmtl {

// Circumferential strain per (sector, frame). The sector axis is circular;
// index arithmetic wraps modulo n_sectors. Dimensionless values, negative =
// contraction, positive = stretch.
struct StrainMatrix {
    std::size_t n_sectors = 0;
    std::size_t n_frames = 0;
    double frame_period_ms = 17.0;
    std::vector<double> values;  // row-major [sector][frame]

    StrainMatrix() = default;
    StrainMatrix(std::size_t sectors, std::size_t frames, double period_ms = 17.0)
        : n_sectors(sectors), n_frames(frames), frame_period_ms(period_ms),
          values(sectors * frames, 0.0) {}

    double& at(std::size_t s, std::size_t f) { return values[s * n_frames + f]; }
    double at(std::size_t s, std::size_t f) const { return values[s * n_frames + f]; }
};

// Per-sector time to onset of circumferential shortening, in ms.
struct TosCurve {
    std::vector<double> tos_ms;

    std::size_t n_sectors() const { return tos_ms.size(); }
    double& operator[](std::size_t s) { return tos_ms[s]; }
    double operator[](std::size_t s) const { return tos_ms[s]; }
};

// Per-sector two-class assignment; column 0 = not-LMA, column 1 = LMA.
// Rows sum to 1; hard labels are exact one-hots.
struct SectorLabels {
    std::vector<std::array<double, 2>> probs;

    std::size_t n_sectors() const { return probs.size(); }
    bool is_lma(std::size_t s) const { return probs[s][1] > probs[s][0]; }

    static SectorLabels hard(const std::vector<bool>& lma) {
        SectorLabels l;
        l.probs.reserve(lma.size());
        for (bool b : lma) l.probs.push_back(b ? std::array<double, 2>{0.0, 1.0}
                                               : std::array<double, 2>{1.0, 0.0});
        return l;
    }
};

inline const char* kSliceLevels[4] = {"basal", "mid1", "mid2", "apical"};

struct PhantomRecord {
    std::string id;
    std::string patient_id;
    std::string slice_level;  // basal | mid1 | mid2 | apical
    StrainMatrix strain;
    TosCurve tos;
    SectorLabels labels;
    std::vector<bool> scar_mask;
};

// Generator knobs. Scar sectors carry the confound: early positive stretch
// with no genuine contraction onset, labeled not-LMA with baseline-band TOS.
struct PhantomSpec {
    std::size_t n_sectors = 18;
    std::size_t n_frames_min = 36;
    std::size_t n_frames_max = 48;
    double frame_period_ms = 17.0;
    double baseline_tos_ms_min = 17.0;
    double baseline_tos_ms_max = 68.0;
    double lma_tos_ms_min = 170.0;
    double lma_tos_ms_max = 340.0;
    std::size_t lma_width_min = 3;
    std::size_t lma_width_max = 7;
    double scar_probability = 0.3;
    std::size_t scar_width_min = 2;
    std::size_t scar_width_max = 4;
    double peak_strain_min = -0.22;
    double peak_strain_max = -0.12;
    double pre_stretch_peak_min = 0.05;
    double pre_stretch_peak_max = 0.15;
    double onset_rise_ms = 16.0;   // descent reaches peak this long after TOS
    double noise_std = 0.01;
    double sector_smoothing_sigma = 1.0;  // applied to the noise field only
    std::uint64_t rng_seed = 0;

    void validate() const;
};

}  // namespace tosmtl
