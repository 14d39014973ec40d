#pragma once

#include <map>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "tosmtl/strain_types.hpp"

namespace tosmtl {

struct PredictionRecord {
    std::string id;
    std::string method;  // mtl | regression | snake
    TosCurve tos;
    std::optional<SectorLabels> labels;  // absent for snake
};

// Mean over sectors of |pred - gt|, in ms.
double tos_mae_ms(const TosCurve& pred, const TosCurve& gt);

struct ClassificationMetrics {
    double accuracy = 0.0;
    double precision = 0.0;
    double recall = 0.0;
    double f1 = 0.0;
    // True when no positives exist and none were predicted: precision,
    // recall and F1 are reported as 1 by convention.
    bool degenerate_convention = false;
};

ClassificationMetrics classification_metrics(const SectorLabels& pred, const SectorLabels& gt);

// Sector strata: scar (scar_mask), lma (ground-truth labels), normal (rest).
struct StratumStats {
    std::size_t sectors = 0;
    double mae_ms = 0.0;  // meaningless when sectors == 0; see present()
    bool present() const { return sectors > 0; }
};

struct MethodReport {
    std::string method;
    StratumStats all, scar, lma, normal;
    double mae_ms_per_record_mean = 0.0;  // mean of per-matrix sector means
    std::size_t records = 0;
    std::vector<std::string> missing_record_ids;  // in dataset, not predicted
};

struct ScarStratifiedReport {
    std::vector<MethodReport> methods;  // ordered by overall MAE, ascending
};

ScarStratifiedReport scar_stratified_report(const std::vector<PredictionRecord>& predictions,
                                            const std::vector<PhantomRecord>& dataset);

nlohmann::ordered_json report_to_json(const ScarStratifiedReport& report);
std::string report_to_csv(const ScarStratifiedReport& report, const std::string& comment = "");

// Prediction JSONL
void save_predictions(const std::vector<PredictionRecord>& predictions, const std::string& path,
                      const nlohmann::ordered_json* meta = nullptr);
std::vector<PredictionRecord> load_predictions(const std::string& path);

}  // namespace tosmtl
