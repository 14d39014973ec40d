#include "tosmtl/model.hpp"

#include <algorithm>
#include <cmath>
#include <memory>

namespace tosmtl {

using nn::BatchNorm;
using nn::Conv2d;
using nn::Flatten;
using nn::FullyConnected;
using nn::MaxPool2d;
using nn::Mode;
using nn::ReLU;
using nn::Sequential;
using nn::ShiftedLeakyReLU;
using nn::Tensor;

namespace {
constexpr double kProbFloor = 1e-12;
}

void ModelConfig::validate() const {
    if (n_sectors == 0 || n_frames == 0) throw ConfigError("model: empty input shape");
    if (channels == 0) throw ConfigError("model: channels must be >= 1");
    if (kernel == 0 || kernel % 2 == 0) throw ConfigError("model: kernel must be odd");
    if (!(leak_alpha > 0.0 && leak_alpha < 1.0)) throw ConfigError("model: leak slope in (0,1)");
    if (tos_min_ms < 0.0) throw ConfigError("model: tos_min_ms must be >= 0");
    for (std::size_t w : fc_hidden) {
        if (w == 0) throw ConfigError("model: fc widths must be >= 1");
    }
}

MtlModel::MtlModel(ModelConfig cfg) : cfg_(std::move(cfg)) {
    cfg_.validate();

    // Joint trunk: conv -> batchnorm -> maxpool(2,2 ceil) -> relu, x3.
    std::size_t in_ch = 1;
    for (std::size_t i = 1; i <= cfg_.joint_conv_layers; ++i) {
        joint_.add(std::make_unique<Conv2d>("joint.conv" + std::to_string(i), in_ch,
                                            cfg_.channels, cfg_.kernel));
        joint_.add(std::make_unique<BatchNorm>("joint.bn" + std::to_string(i), cfg_.channels));
        joint_.add(std::make_unique<MaxPool2d>("joint.pool" + std::to_string(i), 2, 2));
        joint_.add(std::make_unique<ReLU>("joint.relu" + std::to_string(i)));
        in_ch = cfg_.channels;
    }

    // Heads: conv blocks pool only along time (1,2 ceil) so the sector axis
    // survives, then flatten -> fc stack -> output.
    auto build_head = [&](Sequential& head, const std::string& prefix, std::size_t out_width,
                          bool shifted_output) {
        for (std::size_t i = 1; i <= cfg_.head_conv_layers; ++i) {
            head.add(std::make_unique<Conv2d>(prefix + ".conv" + std::to_string(i), cfg_.channels,
                                              cfg_.channels, cfg_.kernel));
            head.add(std::make_unique<BatchNorm>(prefix + ".bn" + std::to_string(i), cfg_.channels));
            head.add(std::make_unique<MaxPool2d>(prefix + ".pool" + std::to_string(i), 1, 2));
            head.add(std::make_unique<ReLU>(prefix + ".relu" + std::to_string(i)));
        }
        head.add(std::make_unique<Flatten>(prefix + ".flatten"));

        std::vector<std::size_t> joint_out =
            joint_.infer_shape({1, 1, cfg_.n_sectors, cfg_.n_frames});
        std::vector<std::size_t> conv_out = joint_out;
        for (std::size_t i = 0; i < cfg_.head_conv_layers * 4 + 1; ++i) {
            conv_out = head.layer(i).infer_shape(conv_out);
        }
        std::size_t width = conv_out[1];

        std::size_t fc_idx = 1;
        for (std::size_t hidden : cfg_.fc_hidden) {
            const std::string fc_tag = prefix + ".fc" + std::to_string(fc_idx);
            head.add(std::make_unique<FullyConnected>(fc_tag, width, hidden));
            head.add(std::make_unique<BatchNorm>(prefix + ".fcbn" + std::to_string(fc_idx), hidden));
            head.add(std::make_unique<ReLU>(prefix + ".fcrelu" + std::to_string(fc_idx)));
            width = hidden;
            ++fc_idx;
        }
        head.add(std::make_unique<FullyConnected>(prefix + ".fc" + std::to_string(fc_idx), width,
                                                  out_width));
        if (shifted_output) {
            head.add(std::make_unique<ShiftedLeakyReLU>(prefix + ".out", cfg_.leak_alpha,
                                                        cfg_.tos_min_ms));
        }
    };

    build_head(reg_head_, "reg", cfg_.n_sectors, true);
    build_head(cls_head_, "cls", 2 * cfg_.n_sectors, false);

    joint_.layer(0).set_skip_input_grad(true);  // nothing consumes d loss / d input
}

void MtlModel::init(Rng& rng) {
    joint_.init_params(rng);
    reg_head_.init_params(rng);
    cls_head_.init_params(rng);
}

std::string MtlModel::last_joint_conv() const {
    return "joint.conv" + std::to_string(cfg_.joint_conv_layers);
}

Tensor MtlModel::batch_input(const std::vector<const StrainMatrix*>& mats) {
    if (mats.empty()) throw ConfigError("batch_input: empty batch");
    const std::size_t S = mats[0]->n_sectors, F = mats[0]->n_frames;
    Tensor input({mats.size(), 1, S, F});
    for (std::size_t b = 0; b < mats.size(); ++b) {
        if (mats[b]->n_sectors != S || mats[b]->n_frames != F) {
            throw ConfigError("batch_input: inconsistent matrix shapes in batch");
        }
        std::copy(mats[b]->values.begin(), mats[b]->values.end(),
                  input.data.begin() + static_cast<std::ptrdiff_t>(b * S * F));
    }
    return input;
}

MtlModel::Output MtlModel::forward(Tensor input, Mode mode) {
    if (input.rank() != 4 || input.shape[1] != 1 || input.shape[2] != cfg_.n_sectors ||
        input.shape[3] != cfg_.n_frames) {
        throw ConfigError("forward: input shape " + nn::shape_str(input.shape) +
                          " does not match configured [B,1," + std::to_string(cfg_.n_sectors) +
                          "," + std::to_string(cfg_.n_frames) + "]");
    }
    const std::size_t B = input.shape[0];
    Tensor features = joint_.forward(std::move(input), mode);
    Output out;
    out.tos = reg_head_.forward(features, mode);
    Tensor logits_flat = cls_head_.forward(features, mode);
    logits_flat.shape = {B, cfg_.n_sectors, 2};
    out.logits = std::move(logits_flat);
    return out;
}

namespace {

// Per-sector two-class softmax with probability floor; fills probs [B,S,2].
void softmax2(const Tensor& logits, Tensor& probs) {
    probs = Tensor(logits.shape);
    const std::size_t n = logits.size() / 2;
    for (std::size_t i = 0; i < n; ++i) {
        const double z0 = logits.data[2 * i], z1 = logits.data[2 * i + 1];
        const double m = std::max(z0, z1);
        const double e0 = std::exp(z0 - m), e1 = std::exp(z1 - m);
        const double denom = e0 + e1;
        probs.data[2 * i] = e0 / denom;
        probs.data[2 * i + 1] = e1 / denom;
    }
}

}  // namespace

LossComponents MtlModel::loss(const Output& out, const Tensor& tos_gt, const Tensor& labels_gt,
                              double lambda_cls, double l1_weight) const {
    const std::size_t B = out.tos.shape[0], S = out.tos.shape[1];
    if (tos_gt.shape != out.tos.shape) throw ConfigError("loss: TOS target shape mismatch");
    if (labels_gt.shape != out.logits.shape) throw ConfigError("loss: label target shape mismatch");

    LossComponents c;

    for (std::size_t b = 0; b < B; ++b) {
        double sq = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double d = out.tos.data[b * S + s] - tos_gt.data[b * S + s];
            sq += d * d;
        }
        c.regression += cfg_.squared_regression ? sq : std::sqrt(sq);
    }
    c.regression /= static_cast<double>(B);

    Tensor probs;
    softmax2(out.logits, probs);
    double ce = 0.0;
    for (std::size_t i = 0; i < probs.size(); ++i) {
        const double p = std::max(probs.data[i], kProbFloor);
        ce -= labels_gt.data[i] * std::log(p);
    }
    c.classification = ce / static_cast<double>(B * S);

    for (const auto* p : const_cast<MtlModel*>(this)->params()) {
        if (!p->is_weight) continue;
        for (double w : p->value.data) c.l1 += std::abs(w);
    }

    c.total = c.regression + lambda_cls * c.classification + l1_weight * c.l1;
    if (!std::isfinite(c.total)) {
        std::string which = !std::isfinite(c.regression)       ? "regression"
                            : !std::isfinite(c.classification) ? "classification"
                                                               : "l1";
        throw NumericError("loss: non-finite " + which + " component");
    }
    return c;
}

void MtlModel::loss_backward(const Output& out, const Tensor& tos_gt, const Tensor& labels_gt,
                             double lambda_cls, double l1_weight) {
    const std::size_t B = out.tos.shape[0], S = out.tos.shape[1];

    // d regression / d tos_pred
    Tensor d_tos(out.tos.shape);
    for (std::size_t b = 0; b < B; ++b) {
        double sq = 0.0;
        for (std::size_t s = 0; s < S; ++s) {
            const double d = out.tos.data[b * S + s] - tos_gt.data[b * S + s];
            sq += d * d;
        }
        if (cfg_.squared_regression) {
            for (std::size_t s = 0; s < S; ++s) {
                d_tos.data[b * S + s] = 2.0 *
                    (out.tos.data[b * S + s] - tos_gt.data[b * S + s]) / static_cast<double>(B);
            }
        } else {
            const double norm = std::sqrt(sq);
            if (norm > 0.0) {
                for (std::size_t s = 0; s < S; ++s) {
                    d_tos.data[b * S + s] = (out.tos.data[b * S + s] - tos_gt.data[b * S + s]) /
                                            (norm * static_cast<double>(B));
                }
            }  // zero subgradient at the kink
        }
    }

    // d (lambda_cls * CE) / d logits, including the probability floor:
    // dCE/dp_c = -l_c / p_c when p_c is above the floor, else 0.
    Tensor probs;
    softmax2(out.logits, probs);
    Tensor d_logits(out.logits.shape);
    const double scale = lambda_cls / static_cast<double>(B * S);
    for (std::size_t i = 0; i < probs.size(); i += 2) {
        const double p0 = probs.data[i], p1 = probs.data[i + 1];
        const double lab0 = labels_gt.data[i], lab1 = labels_gt.data[i + 1];
        const double dp0 = p0 >= kProbFloor ? -lab0 / p0 : 0.0;
        const double dp1 = p1 >= kProbFloor ? -lab1 / p1 : 0.0;
        // Jacobian of softmax: dp_c/dz_j = p_c (delta_cj - p_j)
        d_logits.data[i] = scale * (dp0 * p0 * (1.0 - p0) + dp1 * p1 * (0.0 - p0));
        d_logits.data[i + 1] = scale * (dp0 * p0 * (0.0 - p1) + dp1 * p1 * (1.0 - p1));
    }
    d_logits.shape = {B, 2 * S};

    Tensor g_reg = reg_head_.backward(d_tos);
    Tensor g_cls = cls_head_.backward(d_logits);
    for (std::size_t i = 0; i < g_reg.size(); ++i) g_reg.data[i] += g_cls.data[i];
    joint_.backward(g_reg);

    if (l1_weight != 0.0) {
        for (auto* p : params()) {
            if (!p->is_weight) continue;
            for (std::size_t i = 0; i < p->value.size(); ++i) {
                const double w = p->value.data[i];
                if (w > 0.0) {
                    p->grad.data[i] += l1_weight;
                } else if (w < 0.0) {
                    p->grad.data[i] -= l1_weight;
                }
            }
            p->grad_populated = true;
        }
    }
}

std::pair<TosCurve, SectorLabels> MtlModel::predict(const StrainMatrix& prepared) {
    Tensor input = batch_input({&prepared});
    Output out = forward(input, Mode::eval);
    TosCurve tos;
    tos.tos_ms.assign(out.tos.data.begin(), out.tos.data.end());
    std::vector<bool> lma(cfg_.n_sectors);
    for (std::size_t s = 0; s < cfg_.n_sectors; ++s) {
        lma[s] = out.logits.data[2 * s + 1] > out.logits.data[2 * s];
    }
    return {tos, SectorLabels::hard(lma)};
}

std::vector<nn::ParamTensor*> MtlModel::params() {
    std::vector<nn::ParamTensor*> out = joint_.params();
    for (auto* p : reg_head_.params()) out.push_back(p);
    for (auto* p : cls_head_.params()) out.push_back(p);
    return out;
}

std::vector<std::pair<std::string, Tensor*>> MtlModel::state() {
    auto out = joint_.state();
    for (auto& s : reg_head_.state()) out.push_back(s);
    for (auto& s : cls_head_.state()) out.push_back(s);
    return out;
}

MtlModel::Snapshot MtlModel::snapshot() {
    Snapshot snap;
    for (auto* p : params()) snap.values.push_back(p->value);
    for (auto& [name, t] : state()) snap.state_tensors.push_back(*t);
    return snap;
}

void MtlModel::restore(const Snapshot& snap) {
    auto ps = params();
    auto st = state();
    if (snap.values.size() != ps.size() || snap.state_tensors.size() != st.size()) {
        throw ConfigError("restore: snapshot does not match model");
    }
    for (std::size_t i = 0; i < ps.size(); ++i) ps[i]->value = snap.values[i];
    for (std::size_t i = 0; i < st.size(); ++i) *st[i].second = snap.state_tensors[i];
}

}  // namespace tosmtl
