#pragma once

#include <cstddef>
#include <string>
#include <vector>

#include "tosmtl/errors.hpp"
#include "tosmtl/rng.hpp"

namespace tosmtl::nn {

// Dense row-major tensor of doubles. All training-path arithmetic is done in
// 64-bit so finite-difference gradient checks are meaningful.
struct Tensor {
    std::vector<std::size_t> shape;
    std::vector<double> data;

    Tensor() = default;
    explicit Tensor(std::vector<std::size_t> s, double fill = 0.0);

    std::size_t size() const { return data.size(); }
    std::size_t dim(std::size_t i) const { return shape.at(i); }
    std::size_t rank() const { return shape.size(); }

    double& at(std::size_t i) { return data[i]; }
    double at(std::size_t i) const { return data[i]; }

    // 4-D [B,C,H,W] accessors; the layer stack keeps activations in this layout.
    double& at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    double at4(std::size_t b, std::size_t c, std::size_t h, std::size_t w) const {
        return data[((b * shape[1] + c) * shape[2] + h) * shape[3] + w];
    }
    double& at2(std::size_t r, std::size_t c) { return data[r * shape[1] + c]; }
    double at2(std::size_t r, std::size_t c) const { return data[r * shape[1] + c]; }

    bool same_shape(const Tensor& o) const { return shape == o.shape; }
    bool all_finite() const;
    void fill(double v);
};

std::size_t shape_product(const std::vector<std::size_t>& shape);
std::string shape_str(const std::vector<std::size_t>& shape);

// Trainable tensor with gradient and Adam state. adam_m/adam_v start at zero
// and step_count at 0; grad_populated tracks whether a backward pass has
// touched this parameter since the last optimizer step.
struct ParamTensor {
    std::string name;
    Tensor value;
    Tensor grad;
    Tensor adam_m;
    Tensor adam_v;
    std::size_t step_count = 0;
    bool grad_populated = false;
    // L1 regularization applies to weights only, not biases or batchnorm affines.
    bool is_weight = false;

    ParamTensor() = default;
    ParamTensor(std::string n, std::vector<std::size_t> s, bool weight);

    // Callers running inside parallel regions must set grad_populated once
    // outside the region (single writer per gradient element is assumed).
    void add_grad(std::size_t i, double g) { grad.data[i] += g; }
    void zero_grad();
};

}  // namespace tosmtl::nn
