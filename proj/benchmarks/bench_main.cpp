#include <benchmark/benchmark.h>

#include "tosmtl/gradcam.hpp"
#include "tosmtl/model.hpp"
#include "tosmtl/parallel.hpp"
#include "tosmtl/phantom.hpp"
#include "tosmtl/preprocess.hpp"
#include "tosmtl/snake.hpp"

namespace {

using namespace tosmtl;

nn::Tensor random_batch(std::size_t B, std::size_t S, std::size_t F, Rng& rng) {
    nn::Tensor t({B, 1, S, F});
    for (double& v : t.data) v = rng.uniform(-0.2, 0.2);
    return t;
}

void BM_ConvForward(benchmark::State& state) {
    Rng rng(1);
    nn::Conv2d conv("c", 16, 16, 3);
    conv.init_params(rng);
    nn::Tensor in({static_cast<std::size_t>(state.range(0)), 16, 9, 24});
    for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv.forward(in, nn::Mode::train));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvForward)->Arg(16)->Arg(64);

void BM_ConvBackward(benchmark::State& state) {
    Rng rng(2);
    nn::Conv2d conv("c", 16, 16, 3);
    conv.init_params(rng);
    nn::Tensor in({static_cast<std::size_t>(state.range(0)), 16, 9, 24});
    nn::Tensor up(in.shape);
    for (double& v : in.data) v = rng.uniform(-1.0, 1.0);
    for (double& v : up.data) v = rng.uniform(-1.0, 1.0);
    conv.forward(in, nn::Mode::train);
    for (auto _ : state) {
        benchmark::DoNotOptimize(conv.backward(up));
        for (auto* p : conv.params()) p->zero_grad();
    }
    state.SetItemsProcessed(state.iterations() * state.range(0));
}
BENCHMARK(BM_ConvBackward)->Arg(16)->Arg(64);

void BM_ModelTrainStep(benchmark::State& state) {
    Rng rng(3);
    ModelConfig cfg;
    MtlModel model(cfg);
    model.init(rng);
    const std::size_t B = static_cast<std::size_t>(state.range(0));
    nn::Tensor input = random_batch(B, 18, 48, rng);
    nn::Tensor tos({B, 18}, 100.0);
    nn::Tensor labels({B, 18, 2});
    for (std::size_t i = 0; i < labels.size(); i += 2) labels.data[i] = 1.0;
    for (auto _ : state) {
        auto out = model.forward(input, nn::Mode::train);
        benchmark::DoNotOptimize(model.loss(out, tos, labels, 10.0, 0.1));
        model.loss_backward(out, tos, labels, 10.0, 0.1);
        for (auto* p : model.params()) p->zero_grad();
    }
    state.SetItemsProcessed(state.iterations() * B);
}
BENCHMARK(BM_ModelTrainStep)->Arg(16)->Arg(64);

void BM_PhantomGenerate(benchmark::State& state) {
    PhantomSpec spec;
    spec.rng_seed = 4;
    for (auto _ : state) {
        benchmark::DoNotOptimize(generate_phantom(spec, static_cast<std::size_t>(state.range(0))));
    }
    state.SetItemsProcessed(state.iterations() * state.range(0) * 4);
}
BENCHMARK(BM_PhantomGenerate)->Arg(1)->Arg(16);

void BM_SnakeSolve(benchmark::State& state) {
    PhantomSpec spec;
    spec.rng_seed = 5;
    auto rec = generate_phantom(spec, 1)[0];
    SnakeConfig cfg;
    for (auto _ : state) {
        benchmark::DoNotOptimize(snake_tos(rec.strain, cfg));
    }
}
BENCHMARK(BM_SnakeSolve);

void BM_GradCam(benchmark::State& state) {
    Rng rng(6);
    ModelConfig cfg;
    MtlModel model(cfg);
    model.init(rng);
    StrainMatrix m(18, 48);
    for (double& v : m.values) v = rng.uniform(-0.2, 0.2);
    for (auto _ : state) {
        benchmark::DoNotOptimize(gradcam(model, m, 9));
        for (auto* p : model.params()) p->zero_grad();
    }
}
BENCHMARK(BM_GradCam);

}  // namespace

BENCHMARK_MAIN();
