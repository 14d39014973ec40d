#pragma once

#include <functional>
#include <string>
#include <vector>

#include "tosmtl/tensor.hpp"

namespace tosmtl::nn {

struct GradCheckResult {
    double max_rel_error = 0.0;
    std::string worst_param;
    std::size_t worst_index = 0;
    double worst_analytic = 0.0;
    double worst_numeric = 0.0;
    std::size_t checked = 0;
};

// rel = |a - n| / (|a| + |n|), 0 when both magnitudes are below zero_tol.
double relative_error(double analytic, double numeric, double zero_tol = 1e-7);

// Central finite differences over every entry of every parameter.
// loss_fn must be a pure forward evaluation; backward_fn must populate
// grads from a clean slate. Throws NumericError on non-finite loss.
GradCheckResult gradient_check(const std::vector<ParamTensor*>& params,
                               const std::function<double()>& loss_fn,
                               const std::function<void()>& backward_fn,
                               double step = 1e-5,
                               double zero_tol = 1e-7);

}  // namespace tosmtl::nn
