#include "tosmtl/snake.hpp"

#include <algorithm>
#include <cmath>

namespace tosmtl {

void SnakeConfig::validate() const {
    if (lambda <= 0.0 || beta <= 0.0 || gamma < 0.0) {
        throw ConfigError("snake: lambda, beta must be > 0 and gamma >= 0");
    }
    if (onset_threshold <= 0.0) throw ConfigError("snake: onset threshold must be > 0");
    if (max_iters == 0) throw ConfigError("snake: max_iters must be >= 1");
}

std::vector<std::vector<double>> onset_potential(const StrainMatrix& m, double eps,
                                                 double smoothing_sigma) {
    const std::size_t S = m.n_sectors, T = m.n_frames;
    std::vector<std::vector<double>> field(S, std::vector<double>(T + 1, 0.0));

    for (std::size_t s = 0; s < S; ++s) {
        // prefix[u] = #{frames < u that are contracting}
        std::vector<std::size_t> prefix(T + 1, 0);
        for (std::size_t u = 0; u < T; ++u) {
            prefix[u + 1] = prefix[u] + (m.at(s, u) < -eps ? 1 : 0);
        }
        const std::size_t total_contracting = prefix[T];
        for (std::size_t tau = 0; tau <= T; ++tau) {
            const auto early_miss = prefix[tau];  // contracting before onset
            const auto late_miss = (T - tau) - (total_contracting - prefix[tau]);
            field[s][tau] = static_cast<double>(early_miss + late_miss);
        }
    }

    if (smoothing_sigma > 0.0) {
        const int radius = static_cast<int>(std::ceil(3.0 * smoothing_sigma));
        std::vector<double> kernel(2 * radius + 1);
        for (int i = -radius; i <= radius; ++i) {
            kernel[i + radius] = std::exp(-0.5 * (i / smoothing_sigma) * (i / smoothing_sigma));
        }
        for (std::size_t s = 0; s < S; ++s) {
            std::vector<double> smoothed(T + 1, 0.0);
            for (std::size_t tau = 0; tau <= T; ++tau) {
                double acc = 0.0, wsum = 0.0;
                for (int i = -radius; i <= radius; ++i) {
                    const std::int64_t u = static_cast<std::int64_t>(tau) + i;
                    if (u < 0 || u > static_cast<std::int64_t>(T)) continue;  // truncate at edges
                    acc += kernel[i + radius] * field[s][static_cast<std::size_t>(u)];
                    wsum += kernel[i + radius];
                }
                smoothed[tau] = acc / wsum;
            }
            field[s] = std::move(smoothed);
        }
    }
    return field;
}

namespace {

// Linear interpolation over the tau grid, clamped to [0, T].
double sample_potential(const std::vector<double>& row, double t) {
    const double max_t = static_cast<double>(row.size() - 1);
    t = std::clamp(t, 0.0, max_t);
    const double f = std::floor(t);
    const std::size_t i0 = static_cast<std::size_t>(f);
    if (i0 + 1 >= row.size()) return row[row.size() - 1];
    const double frac = t - f;
    return row[i0] * (1.0 - frac) + row[i0 + 1] * frac;
}

double potential_slope(const std::vector<double>& row, double t) {
    const double h = 0.5;
    return (sample_potential(row, t + h) - sample_potential(row, t - h)) / (2.0 * h);
}

}  // namespace

double snake_energy(const std::vector<double>& nodes,
                    const std::vector<std::vector<double>>& potential,
                    double lambda, double beta, double /*max_frame*/) {
    const std::size_t S = nodes.size();
    double e = 0.0;
    for (std::size_t s = 0; s < S; ++s) {
        const double t = nodes[s];
        const double tn = nodes[(s + 1) % S];
        const double tp = nodes[(s + S - 1) % S];
        const double d1 = tn - t;
        const double d2 = tn - 2.0 * t + tp;
        e += lambda * d1 * d1 + beta * d2 * d2 + sample_potential(potential[s], t);
    }
    return e;
}

SnakeResult snake_tos(const StrainMatrix& m, const SnakeConfig& cfg) {
    cfg.validate();
    const std::size_t S = m.n_sectors, T = m.n_frames;
    const double max_frame = static_cast<double>(T - 1);
    const auto potential = onset_potential(m, cfg.onset_threshold, cfg.potential_smoothing_sigma);

    SnakeResult result;
    std::vector<double> nodes(S);
    for (std::size_t s = 0; s < S; ++s) {
        double init = max_frame;
        for (std::size_t f = 0; f < T; ++f) {
            if (m.at(s, f) < -cfg.onset_threshold) {
                init = static_cast<double>(f);
                break;
            }
        }
        nodes[s] = init;
    }

    double energy = snake_energy(nodes, potential, cfg.lambda, cfg.beta, max_frame);
    result.energy_trace.push_back(energy);
    double step = cfg.gamma;

    std::vector<double> grad(S), trial(S);
    for (std::size_t iter = 0; iter < cfg.max_iters; ++iter) {
        if (cfg.gamma == 0.0) {  // no update possible; init is the answer
            result.converged = true;
            break;
        }
        for (std::size_t s = 0; s < S; ++s) {
            const double t = nodes[s];
            const double tn = nodes[(s + 1) % S];
            const double tp = nodes[(s + S - 1) % S];
            const double d2_here = tn - 2.0 * t + tp;
            const double tn2 = nodes[(s + 2) % S];
            const double tp2 = nodes[(s + S - 2) % S];
            const double d2_next = tn2 - 2.0 * tn + t;
            const double d2_prev = t - 2.0 * tp + tp2;
            grad[s] = -2.0 * cfg.lambda * d2_here +
                      2.0 * cfg.beta * (d2_prev - 2.0 * d2_here + d2_next) +
                      potential_slope(potential[s], t);
        }

        bool accepted = false;
        while (step > 1e-12 * cfg.gamma) {
            double movement = 0.0;
            for (std::size_t s = 0; s < S; ++s) {
                trial[s] = std::clamp(nodes[s] - step * grad[s], 0.0, max_frame);
                movement = std::max(movement, std::abs(trial[s] - nodes[s]));
            }
            const double trial_energy =
                snake_energy(trial, potential, cfg.lambda, cfg.beta, max_frame);
            if (trial_energy <= energy) {
                nodes.swap(trial);
                energy = trial_energy;
                result.energy_trace.push_back(energy);
                result.iterations = iter + 1;
                accepted = true;
                if (movement < cfg.convergence_tol) result.converged = true;
                step = std::min(cfg.gamma, step * 2.0);
                break;
            }
            step *= 0.5;  // guard the published step size against overshoot
        }
        if (!accepted) {
            result.converged = true;  // no descent direction at float resolution
            break;
        }
        if (result.converged) break;
    }

    result.node_frames = nodes;
    result.tos.tos_ms.resize(S);
    for (std::size_t s = 0; s < S; ++s) {
        result.tos.tos_ms[s] = nodes[s] * m.frame_period_ms;
    }
    return result;
}

}  // namespace tosmtl
