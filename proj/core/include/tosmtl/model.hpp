#pragma once

#include <string>
#include <vector>

#include "tosmtl/layers.hpp"
#include "tosmtl/strain_types.hpp"

namespace tosmtl {

// Three-part network: joint convolutional trunk feeding a TOS regression
// head and a per-sector LMA classification head. The regression-only
// baseline is the same network trained with lambda_cls = 0.
struct ModelConfig {
    std::size_t n_sectors = 18;
    std::size_t n_frames = 48;  // unified input width after trim + pad
    std::size_t channels = 16;
    std::size_t kernel = 3;
    std::size_t joint_conv_layers = 3;
    std::size_t head_conv_layers = 3;
    std::vector<std::size_t> fc_hidden = {256, 64};
    double leak_alpha = 0.01;
    double tos_min_ms = 17.0;  // shift of the final regression activation
    // Paper formula uses the unsquared per-sample Euclidean norm; squared
    // error is available as an alternative.
    bool squared_regression = false;

    void validate() const;
};

struct LossComponents {
    double total = 0.0;
    double regression = 0.0;
    double classification = 0.0;  // unweighted CE
    double l1 = 0.0;              // unweighted L1 of weights
};

class MtlModel {
public:
    explicit MtlModel(ModelConfig cfg);

    void init(Rng& rng);

    struct Output {
        nn::Tensor tos;     // [B, S] in ms
        nn::Tensor logits;  // [B, S, 2], raw
    };

    // input [B, 1, S, F]
    Output forward(nn::Tensor input, nn::Mode mode);

    // Loss of a forward result against targets tos_gt [B,S], labels [B,S,2].
    LossComponents loss(const Output& out, const nn::Tensor& tos_gt,
                        const nn::Tensor& labels_gt, double lambda_cls, double l1_weight) const;

    // Accumulates gradients of the weighted total loss into all parameters.
    // Requires the caches of the forward() that produced `out`.
    void loss_backward(const Output& out, const nn::Tensor& tos_gt,
                       const nn::Tensor& labels_gt, double lambda_cls, double l1_weight);

    // Single-record inference (eval mode); input must match the configured shape.
    std::pair<TosCurve, SectorLabels> predict(const StrainMatrix& prepared);

    std::vector<nn::ParamTensor*> params();
    std::vector<std::pair<std::string, nn::Tensor*>> state();

    struct Snapshot {
        std::vector<nn::Tensor> values;
        std::vector<nn::Tensor> state_tensors;
    };
    Snapshot snapshot();
    void restore(const Snapshot& snap);

    const ModelConfig& config() const { return cfg_; }
    nn::Sequential& joint() { return joint_; }
    nn::Sequential& regression_head() { return reg_head_; }
    nn::Sequential& classification_head() { return cls_head_; }
    // Name of the last conv layer of the joint trunk (Grad-CAM default target).
    std::string last_joint_conv() const;

    static nn::Tensor batch_input(const std::vector<const StrainMatrix*>& mats);

private:
    ModelConfig cfg_;
    nn::Sequential joint_, reg_head_, cls_head_;
};

}  // namespace tosmtl
