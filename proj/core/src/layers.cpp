#include "tosmtl/layers.hpp"

#include <algorithm>
#include <cmath>

#include "tosmtl/parallel.hpp"

namespace tosmtl::nn {

namespace {

void check_4d(const Tensor& t, const std::string& who) {
    if (t.rank() != 4) {
        throw ConfigError(who + ": expected 4-D [B,C,H,W] input, got " + shape_str(t.shape));
    }
}

void check_2d(const Tensor& t, const std::string& who) {
    if (t.rank() != 2) {
        throw ConfigError(who + ": expected 2-D [B,F] input, got " + shape_str(t.shape));
    }
}

double kaiming_uniform_bound(std::size_t fan_in) {
    // gain sqrt(2) for ReLU stacks; uniform bound = gain * sqrt(3 / fan_in)
    return std::sqrt(2.0) * std::sqrt(3.0 / static_cast<double>(fan_in));
}

}  // namespace

// ---------------------------------------------------------------------------
// Conv2d

Conv2d::Conv2d(std::string name, std::size_t c_in, std::size_t c_out, std::size_t k)
    : Layer(std::move(name)),
      c_in_(c_in),
      c_out_(c_out),
      k_(k),
      pad_((k - 1) / 2),
      kernels_(name_ + ".kernels", {c_out, c_in, k, k}, true),
      bias_(name_ + ".bias", {c_out}, false) {
    if (k == 0 || k % 2 == 0) {
        throw ConfigError(name_ + ": kernel size must be odd and >= 1, got " + std::to_string(k));
    }
    if (c_in == 0 || c_out == 0) {
        throw ConfigError(name_ + ": channel counts must be >= 1");
    }
}

std::vector<std::size_t> Conv2d::infer_shape(const std::vector<std::size_t>& in) const {
    if (in.size() != 4 || in[1] != c_in_) {
        throw ConfigError(name_ + ": input shape " + shape_str(in) + " does not match C_in=" +
                          std::to_string(c_in_));
    }
    return {in[0], c_out_, in[2], in[3]};
}

void Conv2d::init_params(Rng& rng) {
    const double bound = kaiming_uniform_bound(c_in_ * k_ * k_);
    for (double& w : kernels_.value.data) w = rng.uniform(-bound, bound);
    bias_.value.fill(0.0);
}

namespace {

// One output row of a 3x3 cross-correlation tap row: acc += stencil(irow).
inline void stencil3_row(double* __restrict acc, const double* __restrict irow, double w0,
                         double w1, double w2, std::size_t W) {
    if (W == 1) {
        acc[0] += w1 * irow[0];
        return;
    }
    acc[0] += w1 * irow[0] + w2 * irow[1];
    for (std::size_t x = 1; x + 1 < W; ++x) {
        acc[x] += w0 * irow[x - 1] + w1 * irow[x] + w2 * irow[x + 1];
    }
    acc[W - 1] += w0 * irow[W - 2] + w1 * irow[W - 1];
}

// Accumulates plane_out += cross_correlate(plane_in, k3 kernel), zero padded.
inline void conv3_plane(double* __restrict out_plane, const double* __restrict in_plane,
                        const double* __restrict kern, std::size_t H, std::size_t W) {
    for (std::size_t y = 0; y < H; ++y) {
        double* orow = out_plane + y * W;
        for (std::size_t ky = 0; ky < 3; ++ky) {
            const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - 1;
            if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
            const double* irow = in_plane + static_cast<std::size_t>(iy) * W;
            stencil3_row(orow, irow, kern[ky * 3], kern[ky * 3 + 1], kern[ky * 3 + 2], W);
        }
    }
}

// Generic odd-k tap accumulation (rarely used; k == 3 has the fast path).
inline void conv_generic_plane(double* out_plane, const double* in_plane, const double* kern,
                               std::size_t H, std::size_t W, std::size_t k, std::size_t pad) {
    for (std::size_t ky = 0; ky < k; ++ky) {
        const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(pad);
        const std::size_t y0 = dy < 0 ? static_cast<std::size_t>(-dy) : 0;
        const std::size_t y1 = dy > 0 ? H - static_cast<std::size_t>(dy) : H;
        for (std::size_t kx = 0; kx < k; ++kx) {
            const double w = kern[ky * k + kx];
            const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad);
            const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
            const std::size_t x1 = dx > 0 ? W - static_cast<std::size_t>(dx) : W;
            for (std::size_t y = y0; y < y1; ++y) {
                double* orow = out_plane + y * W;
                const double* irow = in_plane + (y + dy) * W + dx;
                for (std::size_t x = x0; x < x1; ++x) orow[x] += w * irow[x];
            }
        }
    }
}

}  // namespace

Tensor Conv2d::forward(Tensor input, Mode) {
    check_4d(input, name_);
    if (input.shape[1] != c_in_) {
        throw ConfigError(name_ + ": input has " + std::to_string(input.shape[1]) +
                          " channels, expected " + std::to_string(c_in_));
    }
    const std::size_t B = input.shape[0], H = input.shape[2], W = input.shape[3];
    Tensor out({B, c_out_, H, W});

    parallel_for(B * c_out_, [&](std::size_t bc) {
        const std::size_t b = bc / c_out_, co = bc % c_out_;
        double* out_plane = &out.data[(b * c_out_ + co) * H * W];
        const double bv = bias_.value.data[co];
        for (std::size_t i = 0; i < H * W; ++i) out_plane[i] = bv;
        for (std::size_t ci = 0; ci < c_in_; ++ci) {
            const double* in_plane = &input.data[(b * c_in_ + ci) * H * W];
            const double* kern = &kernels_.value.data[((co * c_in_ + ci) * k_) * k_];
            if (k_ == 3) {
                conv3_plane(out_plane, in_plane, kern, H, W);
            } else {
                conv_generic_plane(out_plane, in_plane, kern, H, W, k_, pad_);
            }
        }
    });

    cached_input_ = std::move(input);
    has_cache_ = true;
    return out;
}

Tensor Conv2d::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    const Tensor& input = cached_input_;
    const std::size_t B = input.shape[0], H = input.shape[2], W = input.shape[3];
    if (upstream.shape != std::vector<std::size_t>{B, c_out_, H, W}) {
        throw ConfigError(name_ + ": upstream shape " + shape_str(upstream.shape) + " mismatch");
    }

    Tensor input_grad;
    if (!skip_input_grad_) input_grad = Tensor({B, c_in_, H, W});

    // d input = cross-correlation of the upstream gradient with the kernel
    // rotated 180 degrees; one writer per (b, ci).
    if (!skip_input_grad_) parallel_for(B * c_in_, [&](std::size_t bc) {
        const std::size_t b = bc / c_in_, ci = bc % c_in_;
        double* gin_plane = &input_grad.data[(b * c_in_ + ci) * H * W];
        for (std::size_t co = 0; co < c_out_; ++co) {
            const double* up_plane = &upstream.data[(b * c_out_ + co) * H * W];
            const double* kern = &kernels_.value.data[((co * c_in_ + ci) * k_) * k_];
            if (k_ == 3) {
                const double rot[9] = {kern[8], kern[7], kern[6], kern[5], kern[4],
                                       kern[3], kern[2], kern[1], kern[0]};
                conv3_plane(gin_plane, up_plane, rot, H, W);
            } else {
                std::vector<double> rot(k_ * k_);
                for (std::size_t i = 0; i < k_ * k_; ++i) rot[i] = kern[k_ * k_ - 1 - i];
                conv_generic_plane(gin_plane, up_plane, rot.data(), H, W, k_, pad_);
            }
        }
    });

    // d bias: one writer per output channel.
    parallel_for(c_out_, [&](std::size_t co) {
        double bsum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double* up_plane = &upstream.data[(b * c_out_ + co) * H * W];
            for (std::size_t i = 0; i < H * W; ++i) bsum += up_plane[i];
        }
        bias_.add_grad(co, bsum);
    });

    // d kernels: one writer per (co, ci) pair. For k == 3 all taps of a row
    // pair are gathered in a single fused pass over x.
    parallel_for(c_out_ * c_in_, [&](std::size_t cc) {
        const std::size_t co = cc / c_in_, ci = cc % c_in_;
        if (k_ == 3) {
            double acc[9] = {0, 0, 0, 0, 0, 0, 0, 0, 0};
            for (std::size_t b = 0; b < B; ++b) {
                const double* up_plane = &upstream.data[(b * c_out_ + co) * H * W];
                const double* in_plane = &cached_input_.data[(b * c_in_ + ci) * H * W];
                for (std::size_t y = 0; y < H; ++y) {
                    const double* __restrict urow = up_plane + y * W;
                    for (std::size_t ky = 0; ky < 3; ++ky) {
                        const std::ptrdiff_t iy = static_cast<std::ptrdiff_t>(y + ky) - 1;
                        if (iy < 0 || iy >= static_cast<std::ptrdiff_t>(H)) continue;
                        const double* __restrict irow = in_plane + static_cast<std::size_t>(iy) * W;
                        double a0 = 0.0, a1 = 0.0, a2 = 0.0;
                        if (W == 1) {
                            a1 = urow[0] * irow[0];
                        } else {
                            a1 += urow[0] * irow[0];
                            a2 += urow[0] * irow[1];
                            for (std::size_t x = 1; x + 1 < W; ++x) {
                                const double u = urow[x];
                                a0 += u * irow[x - 1];
                                a1 += u * irow[x];
                                a2 += u * irow[x + 1];
                            }
                            a0 += urow[W - 1] * irow[W - 2];
                            a1 += urow[W - 1] * irow[W - 1];
                        }
                        acc[ky * 3] += a0;
                        acc[ky * 3 + 1] += a1;
                        acc[ky * 3 + 2] += a2;
                    }
                }
            }
            for (std::size_t t = 0; t < 9; ++t) {
                kernels_.add_grad((co * c_in_ + ci) * 9 + t, acc[t]);
            }
        } else {
            for (std::size_t ky = 0; ky < k_; ++ky) {
                const std::ptrdiff_t dy = static_cast<std::ptrdiff_t>(ky) - static_cast<std::ptrdiff_t>(pad_);
                const std::size_t y0 = dy < 0 ? static_cast<std::size_t>(-dy) : 0;
                const std::size_t y1 = dy > 0 ? H - static_cast<std::size_t>(dy) : H;
                for (std::size_t kx = 0; kx < k_; ++kx) {
                    const std::ptrdiff_t dx = static_cast<std::ptrdiff_t>(kx) - static_cast<std::ptrdiff_t>(pad_);
                    const std::size_t x0 = dx < 0 ? static_cast<std::size_t>(-dx) : 0;
                    const std::size_t x1 = dx > 0 ? W - static_cast<std::size_t>(dx) : W;
                    double ksum = 0.0;
                    for (std::size_t b = 0; b < B; ++b) {
                        const double* up_plane = &upstream.data[(b * c_out_ + co) * H * W];
                        const double* in_plane = &cached_input_.data[(b * c_in_ + ci) * H * W];
                        for (std::size_t y = y0; y < y1; ++y) {
                            const double* urow = up_plane + y * W;
                            const double* irow = in_plane + (y + dy) * W + dx;
                            double s = 0.0;
                            for (std::size_t x = x0; x < x1; ++x) s += urow[x] * irow[x];
                            ksum += s;
                        }
                    }
                    kernels_.add_grad(((co * c_in_ + ci) * k_ + ky) * k_ + kx, ksum);
                }
            }
        }
    });

    kernels_.grad_populated = true;
    bias_.grad_populated = true;
    return input_grad;
}

// ---------------------------------------------------------------------------
// MaxPool2d

MaxPool2d::MaxPool2d(std::string name, std::size_t ph, std::size_t pw)
    : Layer(std::move(name)), ph_(ph), pw_(pw) {
    if (ph == 0 || pw == 0) throw ConfigError(name_ + ": pool window must be >= 1");
}

std::vector<std::size_t> MaxPool2d::infer_shape(const std::vector<std::size_t>& in) const {
    if (in.size() != 4) throw ConfigError(name_ + ": expected 4-D input");
    return {in[0], in[1], (in[2] + ph_ - 1) / ph_, (in[3] + pw_ - 1) / pw_};
}

Tensor MaxPool2d::forward(Tensor input, Mode) {
    check_4d(input, name_);
    const std::size_t B = input.shape[0], C = input.shape[1], H = input.shape[2], W = input.shape[3];
    const std::size_t OH = (H + ph_ - 1) / ph_, OW = (W + pw_ - 1) / pw_;
    Tensor out({B, C, OH, OW});
    argmax_.resize(B * C * OH * OW);  // fully overwritten below
    in_shape_ = input.shape;

    parallel_for(B * C, [&](std::size_t bc) {
        const double* in_plane = &input.data[bc * H * W];
        double* out_plane = &out.data[bc * OH * OW];
        std::size_t* arg_plane = &argmax_[bc * OH * OW];
        for (std::size_t oy = 0; oy < OH; ++oy) {
            const std::size_t y0 = oy * ph_, y1 = std::min(y0 + ph_, H);
            for (std::size_t ox = 0; ox < OW; ++ox) {
                const std::size_t x0 = ox * pw_, x1 = std::min(x0 + pw_, W);
                double best = in_plane[y0 * W + x0];
                std::size_t best_idx = y0 * W + x0;
                for (std::size_t y = y0; y < y1; ++y) {
                    for (std::size_t x = x0; x < x1; ++x) {
                        if (in_plane[y * W + x] > best) {
                            best = in_plane[y * W + x];
                            best_idx = y * W + x;
                        }
                    }
                }
                out_plane[oy * OW + ox] = best;
                arg_plane[oy * OW + ox] = best_idx;
            }
        }
    });

    has_cache_ = true;
    return out;
}

Tensor MaxPool2d::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    const std::size_t B = in_shape_[0], C = in_shape_[1], H = in_shape_[2], W = in_shape_[3];
    const std::size_t OH = (H + ph_ - 1) / ph_, OW = (W + pw_ - 1) / pw_;
    Tensor input_grad(in_shape_);
    parallel_for(B * C, [&](std::size_t bc) {
        const double* up_plane = &upstream.data[bc * OH * OW];
        const std::size_t* arg_plane = &argmax_[bc * OH * OW];
        double* gin_plane = &input_grad.data[bc * H * W];
        for (std::size_t i = 0; i < OH * OW; ++i) gin_plane[arg_plane[i]] += up_plane[i];
    });
    return input_grad;
}

// ---------------------------------------------------------------------------
// BatchNorm

BatchNorm::BatchNorm(std::string name, std::size_t features, double eps, double momentum)
    : Layer(std::move(name)),
      features_(features),
      eps_(eps),
      momentum_(momentum),
      gamma_(name_ + ".gamma", {features}, false),
      beta_(name_ + ".beta", {features}, false),
      running_mean_({features}, 0.0),
      running_var_({features}, 1.0) {
    gamma_.value.fill(1.0);
}

void BatchNorm::init_params(Rng&) {
    gamma_.value.fill(1.0);
    beta_.value.fill(0.0);
}

Tensor BatchNorm::forward(Tensor input, Mode mode) {
    const bool conv_layout = input.rank() == 4;
    if (!conv_layout) check_2d(input, name_);
    if (input.shape[1] != features_) {
        throw ConfigError(name_ + ": feature count " + std::to_string(input.shape[1]) +
                          " != " + std::to_string(features_));
    }
    const std::size_t B = input.shape[0];
    const std::size_t plane = conv_layout ? input.shape[2] * input.shape[3] : 1;
    const std::size_t m = B * plane;

    if (cached_xhat_.shape != input.shape) cached_xhat_ = Tensor(input.shape);
    cached_inv_std_.assign(features_, 0.0);
    cached_mode_ = mode;

    if (mode == Mode::train && m < 2) {
        throw ConfigError(name_ + ": train-mode batchnorm needs at least 2 values per feature");
    }

    parallel_for(features_, [&](std::size_t f) {
        double mean, var;
        if (mode == Mode::train) {
            double sum = 0.0, sumsq = 0.0;
            for (std::size_t b = 0; b < B; ++b) {
                const double* p = &input.data[(b * features_ + f) * plane];
                for (std::size_t i = 0; i < plane; ++i) {
                    sum += p[i];
                    sumsq += p[i] * p[i];
                }
            }
            mean = sum / static_cast<double>(m);
            const double sq = std::max(0.0, sumsq - mean * mean * static_cast<double>(m));
            var = sq / static_cast<double>(m);
            const double unbiased = m > 1 ? sq / static_cast<double>(m - 1) : var;
            running_mean_.data[f] = (1.0 - momentum_) * running_mean_.data[f] + momentum_ * mean;
            running_var_.data[f] = (1.0 - momentum_) * running_var_.data[f] + momentum_ * unbiased;
        } else {
            mean = running_mean_.data[f];
            var = running_var_.data[f];
        }
        const double inv_std = 1.0 / std::sqrt(var + eps_);
        cached_inv_std_[f] = inv_std;
        const double g = gamma_.value.data[f], bt = beta_.value.data[f];
        for (std::size_t b = 0; b < B; ++b) {
            double* p = &input.data[(b * features_ + f) * plane];  // output in place
            double* xh = &cached_xhat_.data[(b * features_ + f) * plane];
            for (std::size_t i = 0; i < plane; ++i) {
                xh[i] = (p[i] - mean) * inv_std;
                p[i] = g * xh[i] + bt;
            }
        }
    });

    has_cache_ = true;
    return input;
}

Tensor BatchNorm::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    const bool conv_layout = cached_xhat_.rank() == 4;
    const std::size_t B = cached_xhat_.shape[0];
    const std::size_t plane = conv_layout ? cached_xhat_.shape[2] * cached_xhat_.shape[3] : 1;
    const double m = static_cast<double>(B * plane);

    Tensor input_grad(cached_xhat_.shape);

    parallel_for(features_, [&](std::size_t f) {
        const double g = gamma_.value.data[f];
        const double inv_std = cached_inv_std_[f];
        double sum_dy = 0.0, sum_dy_xhat = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double* dy = &upstream.data[(b * features_ + f) * plane];
            const double* xh = &cached_xhat_.data[(b * features_ + f) * plane];
            for (std::size_t i = 0; i < plane; ++i) {
                sum_dy += dy[i];
                sum_dy_xhat += dy[i] * xh[i];
            }
        }
        gamma_.add_grad(f, sum_dy_xhat);
        beta_.add_grad(f, sum_dy);

        if (cached_mode_ == Mode::train) {
            for (std::size_t b = 0; b < B; ++b) {
                const double* dy = &upstream.data[(b * features_ + f) * plane];
                const double* xh = &cached_xhat_.data[(b * features_ + f) * plane];
                double* dx = &input_grad.data[(b * features_ + f) * plane];
                for (std::size_t i = 0; i < plane; ++i) {
                    dx[i] = g * inv_std * (dy[i] - sum_dy / m - xh[i] * sum_dy_xhat / m);
                }
            }
        } else {
            // Running statistics are constants in eval mode.
            for (std::size_t b = 0; b < B; ++b) {
                const double* dy = &upstream.data[(b * features_ + f) * plane];
                double* dx = &input_grad.data[(b * features_ + f) * plane];
                for (std::size_t i = 0; i < plane; ++i) dx[i] = g * inv_std * dy[i];
            }
        }
    });

    gamma_.grad_populated = true;
    beta_.grad_populated = true;
    return input_grad;
}

// ---------------------------------------------------------------------------
// ReLU / ShiftedLeakyReLU / Flatten

Tensor ReLU::forward(Tensor input, Mode) {
    mask_.resize(input.size());
    in_shape_ = input.shape;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const bool pos = input.data[i] > 0.0;
        mask_[i] = pos ? 1 : 0;
        input.data[i] = pos ? input.data[i] : 0.0;
    }
    has_cache_ = true;
    return input;
}

Tensor ReLU::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    Tensor input_grad(in_shape_);
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        input_grad.data[i] = mask_[i] ? upstream.data[i] : 0.0;
    }
    return input_grad;
}

ShiftedLeakyReLU::ShiftedLeakyReLU(std::string name, double alpha, double t_min)
    : Layer(std::move(name)), alpha_(alpha), t_min_(t_min) {
    if (!(alpha > 0.0 && alpha < 1.0)) {
        throw ConfigError(name_ + ": leak slope must be in (0,1), got " + std::to_string(alpha));
    }
    if (t_min < 0.0) throw ConfigError(name_ + ": shift must be >= 0");
}

Tensor ShiftedLeakyReLU::forward(Tensor input, Mode) {
    nonneg_.resize(input.size());
    in_shape_ = input.shape;
    for (std::size_t i = 0; i < input.size(); ++i) {
        const double x = input.data[i];
        const bool nonneg = x >= 0.0;
        nonneg_[i] = nonneg ? 1 : 0;
        input.data[i] = t_min_ + (nonneg ? x : alpha_ * x);
    }
    has_cache_ = true;
    return input;
}

Tensor ShiftedLeakyReLU::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    Tensor input_grad(in_shape_);
    for (std::size_t i = 0; i < upstream.size(); ++i) {
        input_grad.data[i] = upstream.data[i] * (nonneg_[i] ? 1.0 : alpha_);
    }
    return input_grad;
}

std::vector<std::size_t> Flatten::infer_shape(const std::vector<std::size_t>& in) const {
    if (in.size() < 2) throw ConfigError(name_ + ": expected batched input");
    std::size_t f = 1;
    for (std::size_t i = 1; i < in.size(); ++i) f *= in[i];
    return {in[0], f};
}

Tensor Flatten::forward(Tensor input, Mode) {
    in_shape_ = input.shape;
    input.shape = infer_shape(input.shape);
    has_cache_ = true;
    return input;
}

Tensor Flatten::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    Tensor input_grad = upstream;
    input_grad.shape = in_shape_;
    return input_grad;
}

// ---------------------------------------------------------------------------
// FullyConnected

FullyConnected::FullyConnected(std::string name, std::size_t f_in, std::size_t f_out)
    : Layer(std::move(name)),
      f_in_(f_in),
      f_out_(f_out),
      weight_(name_ + ".weight", {f_out, f_in}, true),
      bias_(name_ + ".bias", {f_out}, false) {
    if (f_in == 0 || f_out == 0) throw ConfigError(name_ + ": widths must be >= 1");
}

std::vector<std::size_t> FullyConnected::infer_shape(const std::vector<std::size_t>& in) const {
    if (in.size() != 2 || in[1] != f_in_) {
        throw ConfigError(name_ + ": input shape " + shape_str(in) + " does not match F_in=" +
                          std::to_string(f_in_));
    }
    return {in[0], f_out_};
}

void FullyConnected::init_params(Rng& rng) {
    const double bound = kaiming_uniform_bound(f_in_);
    for (double& w : weight_.value.data) w = rng.uniform(-bound, bound);
    bias_.value.fill(0.0);
}

Tensor FullyConnected::forward(Tensor input, Mode) {
    check_2d(input, name_);
    if (input.shape[1] != f_in_) {
        throw ConfigError(name_ + ": input width " + std::to_string(input.shape[1]) +
                          " != " + std::to_string(f_in_));
    }
    const std::size_t B = input.shape[0];
    Tensor out({B, f_out_});
    parallel_for(B, [&](std::size_t b) {
        const double* in_row = &input.data[b * f_in_];
        double* out_row = &out.data[b * f_out_];
        for (std::size_t fo = 0; fo < f_out_; ++fo) {
            const double* w_row = &weight_.value.data[fo * f_in_];
            double s = bias_.value.data[fo];
            for (std::size_t fi = 0; fi < f_in_; ++fi) s += w_row[fi] * in_row[fi];
            out_row[fo] = s;
        }
    });
    cached_input_ = std::move(input);
    has_cache_ = true;
    return out;
}

Tensor FullyConnected::backward(const Tensor& upstream) {
    require_forward_cache(has_cache_);
    const std::size_t B = cached_input_.shape[0];
    Tensor input_grad({B, f_in_});

    parallel_for(B, [&](std::size_t b) {
        const double* up_row = &upstream.data[b * f_out_];
        double* gin_row = &input_grad.data[b * f_in_];
        for (std::size_t fo = 0; fo < f_out_; ++fo) {
            const double u = up_row[fo];
            if (u == 0.0) continue;
            const double* w_row = &weight_.value.data[fo * f_in_];
            for (std::size_t fi = 0; fi < f_in_; ++fi) gin_row[fi] += u * w_row[fi];
        }
    });

    parallel_for(f_out_, [&](std::size_t fo) {
        double bsum = 0.0;
        for (std::size_t b = 0; b < B; ++b) {
            const double u = upstream.data[b * f_out_ + fo];
            bsum += u;
            const double* in_row = &cached_input_.data[b * f_in_];
            for (std::size_t fi = 0; fi < f_in_; ++fi) {
                weight_.grad.data[fo * f_in_ + fi] += u * in_row[fi];
            }
        }
        bias_.add_grad(fo, bsum);
    });

    weight_.grad_populated = true;
    bias_.grad_populated = true;
    return input_grad;
}

// ---------------------------------------------------------------------------
// Sequential

Layer& Sequential::add(std::unique_ptr<Layer> layer) {
    layers_.push_back(std::move(layer));
    return *layers_.back();
}

Tensor Sequential::forward(Tensor input, Mode mode) {
    for (auto& l : layers_) input = l->forward(std::move(input), mode);
    return input;
}

Tensor Sequential::forward_capture(Tensor input, Mode mode,
                                   const std::string& layer_name, Tensor* captured) {
    const std::size_t target = index_of(layer_name);
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        input = layers_[i]->forward(std::move(input), mode);
        if (i == target && captured) *captured = input;
    }
    return input;
}

Tensor Sequential::backward(const Tensor& upstream) {
    Tensor g = upstream;
    for (auto it = layers_.rbegin(); it != layers_.rend(); ++it) g = (*it)->backward(g);
    return g;
}

Tensor Sequential::backward_to(const std::string& layer_name, const Tensor& upstream) {
    const std::size_t target = index_of(layer_name);
    Tensor g = upstream;
    for (std::size_t i = layers_.size(); i-- > target + 1;) g = layers_[i]->backward(g);
    return g;
}

std::vector<ParamTensor*> Sequential::params() {
    std::vector<ParamTensor*> out;
    for (auto& l : layers_) {
        for (ParamTensor* p : l->params()) out.push_back(p);
    }
    return out;
}

std::vector<std::pair<std::string, Tensor*>> Sequential::state() {
    std::vector<std::pair<std::string, Tensor*>> out;
    for (auto& l : layers_) {
        for (auto& s : l->state()) out.push_back(s);
    }
    return out;
}

void Sequential::init_params(Rng& rng) {
    for (auto& l : layers_) l->init_params(rng);
}

std::vector<std::size_t> Sequential::infer_shape(std::vector<std::size_t> in) const {
    for (const auto& l : layers_) in = l->infer_shape(in);
    return in;
}

bool Sequential::has_layer(const std::string& layer_name) const {
    for (const auto& l : layers_) {
        if (l->name() == layer_name) return true;
    }
    return false;
}

std::size_t Sequential::index_of(const std::string& layer_name) const {
    for (std::size_t i = 0; i < layers_.size(); ++i) {
        if (layers_[i]->name() == layer_name) return i;
    }
    throw ConfigError("unknown layer: " + layer_name);
}

}  // namespace tosmtl::nn
