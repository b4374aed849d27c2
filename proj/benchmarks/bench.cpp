#include <benchmark/benchmark.h>

#include "semcomm/log.hpp"
#include "semcomm/ops.hpp"
#include "semcomm/train.hpp"

using namespace semcomm;
using ad::Tensor;

namespace {

Tensor random(ad::Shape shape, Rng& rng, bool grad = false) {
    std::size_t n = 1;
    for (auto e : shape) n *= e;
    std::vector<double> v(n);
    for (auto& x : v) x = rng.uniform(-1.0, 1.0);
    return Tensor(std::move(shape), std::move(v), grad);
}

void BM_Matmul(benchmark::State& state) {
    const auto n = static_cast<std::size_t>(state.range(0));
    Rng rng(1);
    const Tensor a = random({n, n}, rng), b = random({n, n}, rng);
    ad::NoGradGuard ng;
    for (auto _ : state) benchmark::DoNotOptimize(ad::matmul(a, b));
    state.SetItemsProcessed(state.iterations() * 2 * n * n * n);
}
BENCHMARK(BM_Matmul)->Arg(16)->Arg(64)->Arg(256);

void BM_AttentionForward(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    nn::ParamStore store;
    Rng rng(2);
    nn::AttentionConfig cfg;
    cfg.width = 64;
    nn::AttentionLayer layer(store, "a", cfg, rng);
    const Tensor h = random({rows, 64}, rng);
    ad::NoGradGuard ng;
    for (auto _ : state) benchmark::DoNotOptimize(layer.forward(h));
}
BENCHMARK(BM_AttentionForward)->Arg(8)->Arg(25)->Arg(64);

void BM_AttentionBackward(benchmark::State& state) {
    const auto rows = static_cast<std::size_t>(state.range(0));
    nn::ParamStore store;
    Rng rng(3);
    nn::AttentionConfig cfg;
    cfg.width = 64;
    nn::AttentionLayer layer(store, "a", cfg, rng);
    const Tensor h = random({rows, 64}, rng, true);
    for (auto _ : state) {
        store.clear_grad();
        ad::backward(ad::sum(layer.forward(h)));
    }
}
BENCHMARK(BM_AttentionBackward)->Arg(8)->Arg(25)->Arg(64);

void BM_CtcLoss(benchmark::State& state) {
    Rng rng(4);
    Tensor logits = random({8, 5}, rng, true);
    const std::size_t label[] = {0, 1, 2, 3};
    for (auto _ : state) {
        logits.clear_grad();
        ad::backward(task::ctc_loss(logits, label).loss);
    }
}
BENCHMARK(BM_CtcLoss);

// One optimizer step of the fused two-modality task at batch 16.
void BM_TrainStep(benchmark::State& state) {
    model::ModelConfig cfg;
    cfg.width = static_cast<std::size_t>(state.range(0));
    cfg.compressed = 4;
    cfg.encoder_layers = 1;
    cfg.fusion_layers = 2;
    cfg.fusion_heads = 4;
    cfg.conv_channels = 8;
    model::Model m(cfg, {model::preset_task("mm_xor", cfg.input)});
    data::DatasetSpec ds;
    ds.kind = data::DatasetKind::mm_xor;
    ds.size = 16;
    const std::vector<train::TrainTask> tasks{{0, data::gen_dataset(ds).samples, 1e-3}};
    train::TrainConfig tc;
    tc.steps = 1;
    for (auto _ : state) benchmark::DoNotOptimize(train::train(m, tasks, tc));
}
BENCHMARK(BM_TrainStep)->Arg(32)->Arg(64)->Unit(benchmark::kMillisecond);

}  // namespace

BENCHMARK_MAIN();
