#pragma once

#include "tosmtl/rng.hpp"
#include "tosmtl/strain_types.hpp"

namespace tosmtl {

enum class SectorKind { normal, lma, scar };

// One sector's noiseless strain time series.
//   normal: exactly zero before tos, then a fast raised-cosine descent to a
//           negative peak drawn from the spec range.
//   lma:    same descent, preceded by a positive pre-stretch bump that
//           returns to zero at tos.
//   scar:   early positive stretch that decays to a small plateau; the late
//           minimum stays above -0.03, so there is no contraction onset.
std::vector<double> synth_sector_curve(double tos_ms, SectorKind kind,
                                       std::size_t n_frames, const PhantomSpec& spec,
                                       Rng& rng);

// 4 slices per patient (basal, mid1, mid2, apical). Pure function of
// (spec, patient_count); per-patient RNG streams derive from the seed, so
// patients can be generated in parallel without changing the output.
std::vector<PhantomRecord> generate_phantom(const PhantomSpec& spec, std::size_t patient_count);

// Engineering strain from per-sector chord endpoints.
// endpoints[frame][sector] = (x, y) in mm; sector s spans endpoints s..s+1
// (circular). Frame 0 is the reference configuration.
StrainMatrix strain_from_displacement(
    const std::vector<std::vector<std::array<double, 2>>>& endpoints,
    double frame_period_ms = 17.0);

}  // namespace tosmtl
