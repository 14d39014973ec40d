#include "tosmtl/gradcheck.hpp"

#include <cmath>

#include "tosmtl/errors.hpp"

namespace tosmtl::nn {

double relative_error(double analytic, double numeric, double zero_tol) {
    const double aa = std::abs(analytic), an = std::abs(numeric);
    if (aa < zero_tol && an < zero_tol) return 0.0;
    return std::abs(analytic - numeric) / (aa + an);
}

GradCheckResult gradient_check(const std::vector<ParamTensor*>& params,
                               const std::function<double()>& loss_fn,
                               const std::function<void()>& backward_fn,
                               double step,
                               double zero_tol) {
    for (ParamTensor* p : params) p->zero_grad();
    backward_fn();

    std::vector<std::vector<double>> analytic;
    analytic.reserve(params.size());
    for (ParamTensor* p : params) analytic.push_back(p->grad.data);

    GradCheckResult result;
    for (std::size_t pi = 0; pi < params.size(); ++pi) {
        ParamTensor* p = params[pi];
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double saved = p->value.data[i];
            p->value.data[i] = saved + step;
            const double lp = loss_fn();
            p->value.data[i] = saved - step;
            const double lm = loss_fn();
            p->value.data[i] = saved;
            if (!std::isfinite(lp) || !std::isfinite(lm)) {
                throw NumericError("gradient_check: non-finite loss while perturbing " +
                                   p->name + "[" + std::to_string(i) + "]");
            }
            const double numeric = (lp - lm) / (2.0 * step);
            const double err = relative_error(analytic[pi][i], numeric, zero_tol);
            ++result.checked;
            if (err > result.max_rel_error) {
                result.max_rel_error = err;
                result.worst_param = p->name;
                result.worst_index = i;
                result.worst_analytic = analytic[pi][i];
                result.worst_numeric = numeric;
            }
        }
    }

    for (ParamTensor* p : params) p->zero_grad();
    return result;
}

}  // namespace tosmtl::nn
