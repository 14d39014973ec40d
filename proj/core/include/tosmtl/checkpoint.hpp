#pragma once

#include <string>

#include "tosmtl/model.hpp"
#include "tosmtl/train.hpp"

namespace tosmtl {

// Checkpoint layout: 8-byte magic "TOSMTL01", u64-LE length of a UTF-8 JSON
// header (model config, train config, named tensor index with shapes and
// byte offsets), then the raw little-endian float64 blob. Parameter values
// and batchnorm running statistics round-trip bitwise.
void save_checkpoint(MtlModel& model, const TrainConfig& train_cfg, const std::string& path);

struct Checkpoint {
    ModelConfig model_config;
    TrainConfig train_config;
};

// Parses the header only.
Checkpoint read_checkpoint_header(const std::string& path);

// Loads tensors into an existing model; shape mismatches name the tensor.
Checkpoint load_checkpoint(MtlModel& model, const std::string& path);

// Convenience: construct the model from the embedded config, then load.
std::pair<std::unique_ptr<MtlModel>, Checkpoint> load_checkpoint(const std::string& path);

}  // namespace tosmtl
