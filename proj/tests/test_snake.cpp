#include <doctest.h>

#include <cmath>

#include "tosmtl/phantom.hpp"
#include "tosmtl/preprocess.hpp"
#include "tosmtl/snake.hpp"

using namespace tosmtl;

namespace {

StrainMatrix step_matrix(std::size_t sectors, std::size_t frames, std::size_t onset_frame,
                         double depth = -0.2) {
    StrainMatrix m(sectors, frames);
    for (std::size_t s = 0; s < sectors; ++s) {
        for (std::size_t f = onset_frame; f < frames; ++f) m.at(s, f) = depth;
    }
    return m;
}

}  // namespace

TEST_CASE("onset_potential: all-zero strain decreases linearly, minimum at tau = n_frames") {
    StrainMatrix m(3, 20);
    auto field = onset_potential(m, 0.03);  // unsmoothed
    for (std::size_t s = 0; s < 3; ++s) {
        for (std::size_t tau = 0; tau <= 20; ++tau) {
            CHECK(field[s][tau] == doctest::Approx(20.0 - static_cast<double>(tau)));
        }
        CHECK(field[s][20] == 0.0);
    }
}

TEST_CASE("onset_potential: perfect step has unsmoothed minimum exactly at the step, P = 0") {
    auto m = step_matrix(2, 30, 10);
    auto field = onset_potential(m, 0.03);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(field[s][10] == 0.0);
        for (std::size_t tau = 0; tau <= 30; ++tau) {
            if (tau != 10) CHECK(field[s][tau] > 0.0);
        }
    }
}

TEST_CASE("onset_potential: constant contraction has its minimum at tau = 0") {
    StrainMatrix m(2, 15);
    for (double& v : m.values) v = -0.2;
    auto field = onset_potential(m, 0.03);
    for (std::size_t s = 0; s < 2; ++s) {
        CHECK(field[s][0] == 0.0);
        for (std::size_t tau = 1; tau <= 15; ++tau) CHECK(field[s][tau] > 0.0);
    }
}

TEST_CASE("snake recovers a uniform noiseless step within 0.5 frames") {
    auto m = step_matrix(18, 40, 10);
    SnakeConfig cfg;
    auto result = snake_tos(m, cfg);
    for (std::size_t s = 0; s < 18; ++s) {
        CHECK(std::abs(result.node_frames[s] - 10.0) <= 0.5);
        CHECK(result.tos.tos_ms[s] == result.node_frames[s] * m.frame_period_ms);
    }
}

TEST_CASE("snake with huge internal weights flattens to a near-constant curve") {
    // onset varies by sector; smoothness should force consensus
    StrainMatrix m(12, 40);
    for (std::size_t s = 0; s < 12; ++s) {
        const std::size_t onset = 8 + (s % 3);
        for (std::size_t f = onset; f < 40; ++f) m.at(s, f) = -0.2;
    }
    SnakeConfig cfg;
    cfg.lambda *= 1e6;
    cfg.beta *= 1e6;
    cfg.gamma = 1e-7;  // step scaled down to match the blown-up energy
    cfg.max_iters = 20000;
    auto result = snake_tos(m, cfg);
    double lo = result.node_frames[0], hi = result.node_frames[0];
    for (double v : result.node_frames) {
        lo = std::min(lo, v);
        hi = std::max(hi, v);
    }
    CHECK(hi - lo <= 0.5);
}

TEST_CASE("snake with gamma = 0 returns the initialization exactly") {
    auto m = step_matrix(6, 30, 12);
    SnakeConfig cfg;
    cfg.gamma = 0.0;
    auto result = snake_tos(m, cfg);
    for (std::size_t s = 0; s < 6; ++s) CHECK(result.node_frames[s] == 12.0);
}

TEST_CASE("snake energy is non-increasing across accepted iterations") {
    PhantomSpec spec;
    spec.rng_seed = 77;
    auto records = generate_phantom(spec, 2);
    SnakeConfig cfg;
    for (const auto& rec : records) {
        auto result = snake_tos(rec.strain, cfg);
        for (std::size_t i = 1; i < result.energy_trace.size(); ++i) {
            CHECK(result.energy_trace[i] <= result.energy_trace[i - 1] + 1e-9);
        }
    }
}

TEST_CASE("snake output is equivariant under circular sector shift") {
    PhantomSpec spec;
    spec.rng_seed = 78;
    spec.noise_std = 0.005;
    auto rec = generate_phantom(spec, 1)[0];
    SnakeConfig cfg;

    auto base = snake_tos(rec.strain, cfg);

    const std::size_t k = 5;
    StrainMatrix shifted = rec.strain;
    TosCurve tos = rec.tos;
    SectorLabels labels = rec.labels;
    circular_shift(shifted, tos, labels, k);
    auto moved = snake_tos(shifted, cfg);

    const std::size_t n = rec.strain.n_sectors;
    for (std::size_t s = 0; s < n; ++s) {
        CHECK(moved.node_frames[(s + k) % n] ==
              doctest::Approx(base.node_frames[s]).epsilon(1e-3));
    }
}

TEST_CASE("snake fails on scar sectors: error there exceeds error on normal sectors") {
    PhantomSpec spec;
    spec.rng_seed = 79;
    spec.scar_probability = 1.0;
    auto records = generate_phantom(spec, 6);
    SnakeConfig cfg;
    double scar_err = 0.0, normal_err = 0.0;
    std::size_t scar_n = 0, normal_n = 0;
    for (const auto& rec : records) {
        auto result = snake_tos(rec.strain, cfg);
        for (std::size_t s = 0; s < rec.strain.n_sectors; ++s) {
            const double err = std::abs(result.tos.tos_ms[s] - rec.tos.tos_ms[s]);
            if (rec.scar_mask[s]) {
                scar_err += err;
                ++scar_n;
            } else if (!rec.labels.is_lma(s)) {
                normal_err += err;
                ++normal_n;
            }
        }
    }
    REQUIRE(scar_n > 0);
    REQUIRE(normal_n > 0);
    CHECK(scar_err / static_cast<double>(scar_n) > normal_err / static_cast<double>(normal_n));
}
