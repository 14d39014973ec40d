#include "tosmtl/tensor.hpp"

#include <cmath>
#include <sstream>

namespace tosmtl::nn {

Tensor::Tensor(std::vector<std::size_t> s, double fill)
    : shape(std::move(s)), data(shape_product(shape), fill) {}

bool Tensor::all_finite() const {
    for (double v : data) {
        if (!std::isfinite(v)) return false;
    }
    return true;
}

void Tensor::fill(double v) {
    std::fill(data.begin(), data.end(), v);
}

std::size_t shape_product(const std::vector<std::size_t>& shape) {
    std::size_t n = 1;
    for (std::size_t d : shape) n *= d;
    return n;
}

std::string shape_str(const std::vector<std::size_t>& shape) {
    std::ostringstream os;
    os << "[";
    for (std::size_t i = 0; i < shape.size(); ++i) {
        if (i) os << "x";
        os << shape[i];
    }
    os << "]";
    return os.str();
}

ParamTensor::ParamTensor(std::string n, std::vector<std::size_t> s, bool weight)
    : name(std::move(n)),
      value(s),
      grad(s),
      adam_m(s),
      adam_v(s),
      is_weight(weight) {}

void ParamTensor::zero_grad() {
    grad.fill(0.0);
    grad_populated = false;
}

}  // namespace tosmtl::nn
