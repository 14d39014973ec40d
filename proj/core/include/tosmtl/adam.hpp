#pragma once

#include <vector>

#include "tosmtl/tensor.hpp"

namespace tosmtl::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

// Bias-corrected Adam over a fixed parameter set. step() consumes the
// accumulated gradients and clears them; stepping again without a fresh
// backward pass is a usage error.
class Adam {
public:
    Adam(std::vector<ParamTensor*> params, AdamConfig cfg);

    void step();
    void zero_grad();

    const AdamConfig& config() const { return cfg_; }

private:
    std::vector<ParamTensor*> params_;
    AdamConfig cfg_;
};

}  // namespace tosmtl::nn
