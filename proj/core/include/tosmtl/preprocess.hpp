#pragma once

#include <string>
#include <vector>

#include <json.hpp>

#include "tosmtl/rng.hpp"
#include "tosmtl/strain_types.hpp"

namespace tosmtl {

struct PreprocessConfig {
    std::size_t trim_last_frames = 5;
    std::size_t target_frames = 48;
    std::size_t target_sectors = 18;
    std::size_t shift_copies = 8;
    std::size_t mixup_copies = 4;
    double mixup_alpha = 0.3;
    double lma_threshold_ms = 119.0;
};

// One network-ready sample. Augmented samples carry provenance: the source
// record ids plus the transform parameters that produced them.
struct TrainSample {
    std::string id;
    std::string patient_id;  // of the primary source record
    StrainMatrix strain;
    TosCurve tos;
    SectorLabels labels;
    std::vector<std::string> provenance_sources;
    std::string provenance_transform;  // "orig" | "shift(k)" | "mixup(lambda)"
};

// Drops the last k time columns; TOS is untouched.
StrainMatrix trim_frames(const StrainMatrix& m, std::size_t k);

// Right-pads time with zeros; extends the sector axis by circular
// duplication (row n_sectors == row 0, ...).
StrainMatrix pad_to(const StrainMatrix& m, std::size_t target_sectors, std::size_t target_frames);

// Rotates matrix rows, TOS entries, and label rows together by k sectors:
// output sector s+k carries input sector s.
void circular_shift(StrainMatrix& m, TosCurve& tos, SectorLabels& labels, std::size_t k);

// Elementwise convex combination of two same-shape samples.
TrainSample mixup(const TrainSample& a, const TrainSample& b, double lambda);

// probs[s] = (0,1) iff tos[s] > threshold_ms.
SectorLabels derive_lma_labels(const TosCurve& tos, double threshold_ms);

// Per record: trim -> pad -> original + shift_copies rotations + mixup_copies
// mixes whose partners come from the already-shifted pool. Deterministic for
// a fixed seed.
std::vector<TrainSample> build_training_set(const std::vector<PhantomRecord>& records,
                                            const PreprocessConfig& config, Rng& rng);

// Augmented-set JSONL (dataset schema plus a "provenance" object per line).
void save_training_set(const std::vector<TrainSample>& samples, const std::string& path,
                       const nlohmann::ordered_json* meta = nullptr);
std::vector<TrainSample> load_training_set(const std::string& path);

}  // namespace tosmtl
