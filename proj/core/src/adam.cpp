#include "tosmtl/adam.hpp"

#include <cmath>

namespace tosmtl::nn {

Adam::Adam(std::vector<ParamTensor*> params, AdamConfig cfg)
    : params_(std::move(params)), cfg_(cfg) {
    if (cfg_.lr < 0.0) throw ConfigError("adam: learning rate must be >= 0");
}

void Adam::step() {
    bool any = false;
    for (const ParamTensor* p : params_) any = any || p->grad_populated;
    if (!any) throw UsageError("adam: step on cleared gradients (no backward since last step)");

    const bool apply = cfg_.lr != 0.0;  // lr == 0 must leave values bitwise untouched
    for (ParamTensor* p : params_) {
        if (!p->grad_populated) continue;  // untouched this round; leave state as-is
        p->step_count += 1;
        const double t = static_cast<double>(p->step_count);
        const double bc1 = 1.0 - std::pow(cfg_.beta1, t);
        const double bc2 = 1.0 - std::pow(cfg_.beta2, t);
        for (std::size_t i = 0; i < p->value.size(); ++i) {
            const double g = p->grad.data[i];
            const double m = cfg_.beta1 * p->adam_m.data[i] + (1.0 - cfg_.beta1) * g;
            const double v = cfg_.beta2 * p->adam_v.data[i] + (1.0 - cfg_.beta2) * g * g;
            p->adam_m.data[i] = m;
            p->adam_v.data[i] = v;
            if (apply) {
                const double m_hat = m / bc1;
                const double v_hat = v / bc2;
                p->value.data[i] -= cfg_.lr * m_hat / (std::sqrt(v_hat) + cfg_.eps);
            }
        }
        p->zero_grad();
    }
}

void Adam::zero_grad() {
    for (ParamTensor* p : params_) p->zero_grad();
}

}  // namespace tosmtl::nn
