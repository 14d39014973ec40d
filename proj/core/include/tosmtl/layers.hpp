#pragma once

#include <memory>
#include <string>
#include <utility>
#include <vector>

#include "tosmtl/tensor.hpp"

namespace tosmtl::nn {

enum class Mode { train, eval };

// A layer owns its parameters and the forward cache needed for backward.
// forward() is pure with respect to outputs; train-mode batchnorm also
// updates running statistics. backward() consumes the cache of the most
// recent forward and accumulates parameter gradients. Inputs are taken by
// value so a Sequential can move activations through the stack.
class Layer {
public:
    explicit Layer(std::string name) : name_(std::move(name)) {}
    virtual ~Layer() = default;

    virtual Tensor forward(Tensor input, Mode mode) = 0;
    virtual Tensor backward(const Tensor& upstream) = 0;
    virtual std::vector<ParamTensor*> params() { return {}; }
    // Non-trainable persistent state (batchnorm running stats).
    virtual std::vector<std::pair<std::string, Tensor*>> state() { return {}; }
    virtual std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const = 0;
    virtual void init_params(Rng&) {}

    const std::string& name() const { return name_; }

    // First-layer optimization: parameter gradients are still accumulated,
    // but the returned input gradient may be empty.
    void set_skip_input_grad(bool skip) { skip_input_grad_ = skip; }
    bool skip_input_grad() const { return skip_input_grad_; }

protected:
    bool skip_input_grad_ = false;
    void require_forward_cache(bool ok) const {
        if (!ok) throw UsageError("backward called before forward on layer " + name_);
    }

    std::string name_;
};

// Cross-correlation, stride 1, odd kernel, same-size zero padding.
class Conv2d : public Layer {
public:
    Conv2d(std::string name, std::size_t c_in, std::size_t c_out, std::size_t k);

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<ParamTensor*> params() override { return {&kernels_, &bias_}; }
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override;
    void init_params(Rng& rng) override;

    ParamTensor& kernels() { return kernels_; }
    ParamTensor& bias() { return bias_; }

private:
    std::size_t c_in_, c_out_, k_, pad_;
    ParamTensor kernels_;  // [C_out, C_in, k, k]
    ParamTensor bias_;     // [C_out]
    Tensor cached_input_;
    bool has_cache_ = false;
};

// Ceil-mode max pooling: output dim = ceil(dim / window), edge windows
// truncated, so repeated pooling never collapses a small axis to zero.
class MaxPool2d : public Layer {
public:
    MaxPool2d(std::string name, std::size_t ph, std::size_t pw);

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override;

private:
    std::size_t ph_, pw_;
    std::vector<std::size_t> argmax_;
    std::vector<std::size_t> in_shape_;
    bool has_cache_ = false;
};

// Per-channel batchnorm over [B,C,H,W] or per-feature over [B,F].
// eps 1e-5; running stats updated with momentum 0.1 in train mode.
class BatchNorm : public Layer {
public:
    BatchNorm(std::string name, std::size_t features, double eps = 1e-5, double momentum = 0.1);

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<ParamTensor*> params() override { return {&gamma_, &beta_}; }
    std::vector<std::pair<std::string, Tensor*>> state() override {
        return {{name_ + ".running_mean", &running_mean_}, {name_ + ".running_var", &running_var_}};
    }
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override { return in; }
    void init_params(Rng&) override;

private:
    std::size_t features_;
    double eps_, momentum_;
    ParamTensor gamma_, beta_;
    Tensor running_mean_, running_var_;

    Mode cached_mode_ = Mode::train;
    Tensor cached_xhat_;
    std::vector<double> cached_inv_std_;  // per feature
    bool has_cache_ = false;
};

class ReLU : public Layer {
public:
    explicit ReLU(std::string name) : Layer(std::move(name)) {}

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override { return in; }

private:
    std::vector<char> mask_;
    std::vector<std::size_t> in_shape_;
    bool has_cache_ = false;
};

// f(x) = t_min + x (x >= 0), t_min + alpha*x (x < 0). Keeps the regression
// output strictly positive over the whole useful pre-activation range while
// leaving a nonzero gradient everywhere.
class ShiftedLeakyReLU : public Layer {
public:
    ShiftedLeakyReLU(std::string name, double alpha, double t_min);

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override { return in; }

    double alpha() const { return alpha_; }
    double t_min() const { return t_min_; }

private:
    double alpha_, t_min_;
    std::vector<char> nonneg_;
    std::vector<std::size_t> in_shape_;
    bool has_cache_ = false;
};

// [B,C,H,W] -> [B, C*H*W]
class Flatten : public Layer {
public:
    explicit Flatten(std::string name) : Layer(std::move(name)) {}

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override;

private:
    std::vector<std::size_t> in_shape_;
    bool has_cache_ = false;
};

class FullyConnected : public Layer {
public:
    FullyConnected(std::string name, std::size_t f_in, std::size_t f_out);

    Tensor forward(Tensor input, Mode mode) override;
    Tensor backward(const Tensor& upstream) override;
    std::vector<ParamTensor*> params() override { return {&weight_, &bias_}; }
    std::vector<std::size_t> infer_shape(const std::vector<std::size_t>& in) const override;
    void init_params(Rng& rng) override;

    ParamTensor& weight() { return weight_; }
    ParamTensor& bias() { return bias_; }

private:
    std::size_t f_in_, f_out_;
    ParamTensor weight_;  // [F_out, F_in]
    ParamTensor bias_;    // [F_out]
    Tensor cached_input_;
    bool has_cache_ = false;
};

// Ordered layer stack with name lookup, used for the joint trunk and both heads.
class Sequential {
public:
    Sequential() = default;

    Layer& add(std::unique_ptr<Layer> layer);
    Tensor forward(Tensor input, Mode mode);
    // Forward while capturing the output of the named layer (for Grad-CAM).
    Tensor forward_capture(Tensor input, Mode mode,
                           const std::string& layer_name, Tensor* captured);
    Tensor backward(const Tensor& upstream);
    // Backward through layers strictly after `layer_name`; returns the
    // gradient at that layer's output.
    Tensor backward_to(const std::string& layer_name, const Tensor& upstream);

    std::vector<ParamTensor*> params();
    std::vector<std::pair<std::string, Tensor*>> state();
    void init_params(Rng& rng);
    std::vector<std::size_t> infer_shape(std::vector<std::size_t> in) const;

    bool has_layer(const std::string& layer_name) const;
    std::size_t layer_count() const { return layers_.size(); }
    Layer& layer(std::size_t i) { return *layers_[i]; }

private:
    std::size_t index_of(const std::string& layer_name) const;
    std::vector<std::unique_ptr<Layer>> layers_;
};

}  // namespace tosmtl::nn
