#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "tosmtl/model.hpp"
#include "tosmtl/preprocess.hpp"

namespace tosmtl {

struct TrainConfig {
    double learning_rate = 1e-3;  // 1e-2 for the regression-only baseline
    std::size_t batch_size = 64;
    double lambda_cls = 10.0;  // 0 disables the classification task
    double l1_weight = 0.1;    // 0.5 for the regression-only baseline
    std::size_t max_epochs = 1000;
    std::size_t patience = 50;
    double val_fraction = 0.1;  // by patient
    std::uint64_t rng_seed = 0;

    void validate() const;
    // Paper defaults per task.
    static TrainConfig mtl_defaults();
    static TrainConfig regression_defaults();
};

struct TrainHistory {
    struct Epoch {
        double train_total, train_reg, train_cls, train_l1, val_total;
    };
    std::vector<Epoch> epochs;
    std::size_t best_epoch = 0;  // 0-based index into epochs
    bool early_stopped = false;

    // CSV: epoch, train_total, train_reg, train_cls, train_l1, val_total
    void save_csv(const std::string& path, const std::string& comment = "") const;
};

// Trains in place, restoring the best-validation parameters before returning.
// Deterministic for a fixed seed. Train and validation patients must be
// disjoint and the validation set non-empty.
TrainHistory train(MtlModel& model, const std::vector<TrainSample>& train_set,
                   const std::vector<TrainSample>& val_set, const TrainConfig& cfg);

// Deterministic by-patient split helpers.
struct PatientSplit {
    std::vector<std::string> train_patients;
    std::vector<std::string> val_patients;
    std::vector<std::string> test_patients;
};

// Sorts patients, takes the last `test_count` as test, then carves
// ceil(val_fraction * rest) validation patients via a seeded shuffle.
PatientSplit split_patients(const std::vector<std::string>& patients, std::size_t test_count,
                            double val_fraction, std::uint64_t seed);

std::vector<PhantomRecord> filter_by_patients(const std::vector<PhantomRecord>& records,
                                              const std::vector<std::string>& patients);

// Targets for a batch of samples.
nn::Tensor tos_targets(const std::vector<const TrainSample*>& batch);
nn::Tensor label_targets(const std::vector<const TrainSample*>& batch);

}  // namespace tosmtl
