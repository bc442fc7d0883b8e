#include <benchmark/benchmark.h>

#include "isingrbm/data_io.hpp"
#include "isingrbm/eval.hpp"
#include "isingrbm/hw_model.hpp"
#include "isingrbm/rbm.hpp"
#include "isingrbm/trainers.hpp"

using namespace isingrbm;

namespace {

RbmParams model(std::size_t m, std::size_t n, std::uint64_t seed) {
    Rng rng(seed);
    return RbmParams::random(m, n, 0.5, rng);
}

void BM_ExactPartition(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    const RbmParams p = model(m, 4, 1);
    for (auto _ : state) benchmark::DoNotOptimize(exact_partition(p));
}
BENCHMARK(BM_ExactPartition)->Arg(12)->Arg(16)->Arg(20);

void BM_ExactGradient12x4(benchmark::State& state) {
    const RbmParams p = model(12, 4, 2);
    Rng rng(3);
    const auto data = gen_synthetic(1, 100, 12, rng).front().data.samples;
    for (auto _ : state) benchmark::DoNotOptimize(exact_gradient(p, data));
}
BENCHMARK(BM_ExactGradient12x4);

void BM_HwSamplePass(benchmark::State& state) {
    const auto m = static_cast<std::size_t>(state.range(0));
    HwConfig cfg;
    cfg.variation_rms = 0.1;
    cfg.noise_rms = 0.1;
    Rng rng(4);
    const HwState hw = hw_init(model(m, 64, 5), cfg, 1, rng);
    BitVector v(m);
    for (std::size_t i = 0; i < m; i += 3) v.set(i, 1);
    for (auto _ : state) benchmark::DoNotOptimize(hw_sample_pass(hw, v, PassDirection::VisibleToHidden, cfg, rng));
}
BENCHMARK(BM_HwSamplePass)->Arg(12)->Arg(784);

void BM_BgfEpoch12x4(benchmark::State& state) {
    Rng rng(6);
    const auto data = gen_synthetic(1, 100, 12, rng).front().data.samples;
    HwConfig cfg;
    cfg.readout_bits = 0;
    TrainConfig train;
    train.algo = Algorithm::BGF;
    train.alpha = 0.001;
    train.particles = 10;
    for (auto _ : state) {
        Rng init(7);
        HwState hw = hw_init(initial_params(12, 4, init), cfg, train.particles, init);
        benchmark::DoNotOptimize(bgf_train(hw, data, train, cfg, rng));
    }
}
BENCHMARK(BM_BgfEpoch12x4);

void BM_Ais12x4(benchmark::State& state) {
    const RbmParams p = model(12, 4, 8);
    AisConfig cfg;
    cfg.n_temps = static_cast<std::size_t>(state.range(0));
    cfg.n_runs = 100;
    Rng rng(9);
    for (auto _ : state) benchmark::DoNotOptimize(ais_log_partition(p, cfg, rng));
}
BENCHMARK(BM_Ais12x4)->Arg(100)->Arg(1000)->Unit(benchmark::kMillisecond);

}  // namespace
BENCHMARK_MAIN();
