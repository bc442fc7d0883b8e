#include <doctest.h>

#include <cmath>

#include "isingrbm/data_io.hpp"
#include "isingrbm/eval.hpp"
#include "isingrbm/trainers.hpp"
#include "oracles.hpp"

using namespace isingrbm;

namespace {

std::vector<BitVector> benchmark_data(std::uint64_t seed, std::size_t visible = 12, std::size_t samples = 100) {
    Rng rng(seed);
    return gen_synthetic(1, samples, visible, rng).front().data.samples;
}

HwConfig noisy(double variation, double noise, std::uint64_t seed) {
    HwConfig cfg = HwConfig::ideal();
    cfg.variation_rms = variation;
    cfg.noise_rms = noise;
    cfg.seed = seed;
    return cfg;
}

// 2x1 model whose large biases make every sampled unit deterministic.
struct PinnedCase {
    RbmParams params = RbmParams::zeros(2, 1);
    HwConfig cfg;
    std::vector<BitVector> data{{1, 0}};

    PinnedCase() {
        cfg = HwConfig::ideal();
        cfg.w_min = -64.0;
        cfg.w_max = 64.0;
        cfg.pump_mode = PumpMode::LinearHeadroom;
        params.hidden_bias(0) = 40.0;   // h = 1 whatever v is
        params.visible_bias(0) = -40.0; // v0 = 0 in the negative phase
        params.visible_bias(1) = -40.0;
        params.weights(0, 0) = 0.25;
        params.weights(1, 0) = -0.5;
    }
};

}  // namespace

TEST_SUITE("trainers") {

TEST_CASE("zero learning rate leaves every trainer's model unchanged") {
    const auto data = benchmark_data(1, 6, 20);
    Rng init(2);
    const RbmParams p = initial_params(6, 3, init, 0.5);
    TrainConfig cfg;
    cfg.alpha = 0.0;
    cfg.iterations = 5;
    cfg.batch_size = 4;
    for (Algorithm algo : {Algorithm::CD, Algorithm::GS, Algorithm::ML}) {
        cfg.algo = algo;
        Rng rng(3);
        CHECK(train(p, data, cfg, noisy(0.1, 0.1, 4), rng).final == p);
    }
    cfg.algo = Algorithm::BGF;
    cfg.batch_size = 1;
    Rng rng(5);
    CHECK(train(p, data, cfg, HwConfig::ideal(), rng).final == p);
}

TEST_CASE("full-batch CD-1 matches Algorithm 1 stepped by hand") {
    Rng init(6);
    RbmParams p = initial_params(3, 2, init, 0.5);
    p.visible_bias << 0.1, -0.2, 0.3;
    p.hidden_bias << -0.1, 0.2;
    const std::vector<BitVector> data{{1, 0, 1}, {0, 1, 1}, {1, 1, 0}, {0, 0, 1}};
    TrainConfig cfg;
    cfg.alpha = 0.3;
    cfg.k = 1;
    cfg.batch_size = data.size();
    cfg.iterations = 2;
    cfg.shuffle = false;
    Rng lib_rng(7), hand_rng(7);
    const TrainTrace trace = cd_k_train(p, data, cfg, lib_rng);
    const RbmParams hand = oracle::hand_cd1(p, data, cfg.alpha, 2, hand_rng);
    CHECK((trace.final.weights - hand.weights).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((trace.final.visible_bias - hand.visible_bias).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((trace.final.hidden_bias - hand.hidden_bias).cwiseAbs().maxCoeff() < 1e-12);
    CHECK(lib_rng == hand_rng);
    CHECK(!(trace.final == p));
}

TEST_CASE("snapshots") {
    const auto data = benchmark_data(8, 5, 10);
    Rng init(9);
    const RbmParams p = initial_params(5, 2, init);
    TrainConfig cfg;
    cfg.iterations = 7;
    cfg.snapshot_every = 3;
    Rng rng(10);
    const TrainTrace trace = cd_k_train(p, data, cfg, rng);
    REQUIRE(trace.snapshots.size() == 4);
    CHECK(trace.snapshots[0].iteration == 0);
    CHECK(trace.snapshots[0].params == p);
    CHECK(trace.snapshots[1].iteration == 3);
    CHECK(trace.snapshots[2].iteration == 6);
    CHECK(trace.snapshots[3].iteration == 7);
    CHECK(trace.snapshots[3].params == trace.final);
}

TEST_CASE("CD-1 raises the likelihood on the 12x4 benchmark") {
    int improved = 0;
    const int runs = 50;
    for (int run = 0; run < runs; ++run) {
        const auto data = benchmark_data(100 + run);
        Rng init(200 + run);
        const RbmParams p = initial_params(12, 4, init);
        TrainConfig cfg;
        cfg.alpha = 0.1;
        cfg.batch_size = data.size();
        cfg.iterations = 1000;
        Rng rng(300 + run);
        const TrainTrace trace = cd_k_train(p, data, cfg, rng);
        improved += exact_log_likelihood(trace.final, data) > exact_log_likelihood(p, data);
    }
    CHECK(improved >= 48);
}

TEST_CASE("GS on ideal hardware reproduces CD bit for bit") {
    const auto data = benchmark_data(11);
    Rng init(12);
    const RbmParams p = initial_params(12, 4, init);
    TrainConfig cfg;
    cfg.alpha = 0.05;
    cfg.k = 2;
    cfg.batch_size = 10;
    cfg.iterations = 20;
    cfg.snapshot_every = 5;
    Rng a(13), b(13);
    const TrainTrace cd = cd_k_train(p, data, cfg, a);
    const TrainTrace gs = gs_train(p, data, cfg, HwConfig::ideal(), b);
    CHECK(cd == gs);
    CHECK(a == b);
}

TEST_CASE("GS under 10% variation and noise stays close to noiseless GS") {
    double clean = 0.0, dirty = 0.0;
    const int seeds = 20;
    for (int s = 0; s < seeds; ++s) {
        const auto data = benchmark_data(400 + s);
        Rng init(500 + s);
        const RbmParams p = initial_params(12, 4, init);
        TrainConfig cfg;
        cfg.alpha = 0.1;
        cfg.batch_size = 10;
        cfg.iterations = 100;
        Rng a(600 + s), b(600 + s);
        clean += exact_log_likelihood(gs_train(p, data, cfg, noisy(0.0, 0.0, 700 + s), a).final, data);
        dirty += exact_log_likelihood(gs_train(p, data, cfg, noisy(0.1, 0.1, 700 + s), b).final, data);
    }
    CHECK(std::abs(dirty - clean) < 0.1 * std::abs(clean));
}

TEST_CASE("BGF rejects minibatches") {
    TrainConfig cfg;
    cfg.algo = Algorithm::BGF;
    cfg.batch_size = 2;
    CHECK_THROWS_AS(cfg.validate(), std::invalid_argument);
    Rng rng(14);
    const std::vector<BitVector> data{{1, 0}};
    CHECK_THROWS_AS(bgf_train(RbmParams::zeros(2, 1), data, cfg, HwConfig::ideal(), rng), std::invalid_argument);
}

TEST_CASE("BGF positive-only pair moves by exactly one pump step") {
    PinnedCase c;
    Rng init(15);
    HwState hw = hw_init(c.params, c.cfg, 1, init);
    TrainConfig cfg;
    cfg.algo = Algorithm::BGF;
    cfg.alpha = 0.05;
    cfg.iterations = 1;
    cfg.anneal_passes = 1;

    RbmParams half;
    TrainHooks hooks;
    hooks.before_negative_phase = [&](const HwState& s) { half = s.params; };
    Rng rng(16);
    bgf_train(hw, c.data, cfg, c.cfg, rng, hooks);

    const double mag = cfg.alpha * c.cfg.pump_step;
    const double w00 = charge_pump_update(0.25, PumpDirection::Increment, mag, 1.0, c.cfg);
    CHECK(w00 > 0.25);
    CHECK(half.weights(0, 0) == w00);
    CHECK(half.weights(1, 0) == -0.5);  // v1 h = 0
    // Negative phase: v = 0, h = 1; only the hidden bias is pumped down.
    CHECK(hw.params.weights(0, 0) == w00);
    CHECK(hw.params.weights(1, 0) == -0.5);
    CHECK(hw.params.visible_bias(0) == charge_pump_update(-40.0, PumpDirection::Increment, mag, 1.0, c.cfg));
    CHECK(hw.params.visible_bias(1) == -40.0);
    const double bh_half = charge_pump_update(40.0, PumpDirection::Increment, mag, 1.0, c.cfg);
    CHECK(half.hidden_bias(0) == bh_half);
    CHECK(hw.params.hidden_bias(0) == charge_pump_update(bh_half, PumpDirection::Decrement, mag, 1.0, c.cfg));
}

TEST_CASE("BGF negative phase samples the half-updated model") {
    // Ideal pump, step = alpha. Under W^t the negative-phase visible unit
    // would stay off; under W^{t+1/2} it turns on and the decrement undoes
    // the increment exactly.
    HwConfig hw_cfg = HwConfig::ideal();
    RbmParams p = RbmParams::zeros(1, 1);
    p.weights(0, 0) = -60.0;
    p.visible_bias(0) = -70.0;
    p.hidden_bias(0) = 80.0;
    Rng init(17);
    HwState hw = hw_init(p, hw_cfg, 1, init);
    TrainConfig cfg;
    cfg.algo = Algorithm::BGF;
    cfg.alpha = 100.0;
    cfg.iterations = 1;
    cfg.anneal_passes = 1;
    TrainHooks hooks;
    hooks.before_negative_phase = [&](const HwState& s) {
        CHECK(s.params.weights(0, 0) == 40.0);
        CHECK(s.params.visible_bias(0) == 30.0);
    };
    Rng rng(18);
    const std::vector<BitVector> data{{1}};
    bgf_train(hw, data, cfg, hw_cfg, rng, hooks);
    CHECK(hw.params == p);
}

TEST_CASE("BGF uses particles round robin") {
    const auto data = benchmark_data(19, 6, 7);
    Rng init(20);
    const RbmParams p = initial_params(6, 3, init);
    const HwConfig hw_cfg = HwConfig::ideal();
    HwState hw = hw_init(p, hw_cfg, 3, init);
    TrainConfig cfg;
    cfg.algo = Algorithm::BGF;
    cfg.alpha = 0.01;
    cfg.iterations = 2;
    std::vector<std::size_t> used;
    TrainHooks hooks;
    hooks.on_particle = [&](std::size_t k) { used.push_back(k); };
    Rng rng(21);
    bgf_train(hw, data, cfg, hw_cfg, rng, hooks);
    REQUIRE(used.size() == 14);
    for (std::size_t t = 0; t < used.size(); ++t) CHECK(used[t] == t % 3);
}

TEST_CASE("BGF improves the likelihood on the 12x4 benchmark") {
    const auto data = benchmark_data(22);
    Rng init(23);
    const RbmParams p = initial_params(12, 4, init);
    TrainConfig cfg;
    cfg.algo = Algorithm::BGF;
    cfg.alpha = 0.001;
    cfg.particles = 10;
    cfg.iterations = 20;
    cfg.snapshot_every = 4;
    HwConfig hw = HwConfig::ideal();
    hw.w_min = -8.0;
    hw.w_max = 8.0;
    hw.pump_mode = PumpMode::LinearHeadroom;
    Rng rng(24);
    const TrainTrace trace = bgf_train(p, data, cfg, hw, rng);
    std::vector<double> ll;
    for (const auto& s : trace.snapshots) ll.push_back(exact_log_likelihood(s.params, data));
    CHECK(ll.back() > ll.front() + 10.0);
    for (std::size_t k = 1; k < ll.size(); ++k) CHECK(ll[k] > ll[k - 1]);
}

TEST_CASE("BGF is deterministic for a fixed seed") {
    const auto data = benchmark_data(25, 8, 20);
    Rng init(26);
    const RbmParams p = initial_params(8, 3, init);
    TrainConfig cfg;
    cfg.algo = Algorithm::BGF;
    cfg.alpha = 0.01;
    cfg.particles = 4;
    cfg.iterations = 5;
    const HwConfig hw = noisy(0.1, 0.1, 27);
    Rng a(28), b(28);
    CHECK(bgf_train(p, data, cfg, hw, a) == bgf_train(p, data, cfg, hw, b));
}

TEST_CASE("ML ascent") {
    const auto data = benchmark_data(29);
    Rng init(30);
    const RbmParams p = initial_params(12, 4, init);
    const auto table = empirical_distribution(data, 12);
    TrainConfig cfg;
    cfg.algo = Algorithm::ML;
    cfg.alpha = 0.05;
    cfg.iterations = 1000;
    cfg.snapshot_every = 1;
    const TrainTrace trace = ml_train(p, data, cfg);
    int nonincreasing = 0;
    double prev = kl_divergence(table, model_visible_distribution(trace.snapshots.front().params));
    for (std::size_t s = 1; s < trace.snapshots.size(); ++s) {
        const double kl = kl_divergence(table, model_visible_distribution(trace.snapshots[s].params));
        nonincreasing += kl <= prev;
        prev = kl;
    }
    CHECK(nonincreasing >= 990);
}

TEST_CASE("ML converges on a 3x2 toy") {
    std::vector<BitVector> data;
    const int counts[8] = {2, 1, 3, 1, 2, 1, 1, 3};
    for (std::uint64_t s = 0; s < 8; ++s)
        for (int c = 0; c < counts[s]; ++c) data.push_back(oracle::bits(s, 3));
    Rng init(31);
    const RbmParams p = initial_params(3, 2, init, 0.5);
    TrainConfig cfg;
    cfg.algo = Algorithm::ML;
    cfg.alpha = 2.0;
    cfg.iterations = 10000;
    const TrainTrace trace = ml_train(p, data, cfg);
    const GradientEstimate g = exact_gradient(trace.final, data);
    const double norm = std::sqrt(g.weights.squaredNorm() + g.visible_bias.squaredNorm() + g.hidden_bias.squaredNorm());
    CHECK(norm < 1e-4);
}

TEST_CASE("persistent CD keeps its particles") {
    const auto data = benchmark_data(32, 6, 12);
    Rng init(33);
    const RbmParams p = initial_params(6, 3, init);
    TrainConfig cfg;
    cfg.persistent = true;
    cfg.particles = 5;
    cfg.iterations = 3;
    cfg.batch_size = 4;
    Rng a(34), b(34);
    CHECK(cd_k_train(p, data, cfg, a) == cd_k_train(p, data, cfg, b));
    Rng c(34), d(34);
    const TrainTrace persistent = cd_k_train(p, data, cfg, c);
    cfg.persistent = false;
    CHECK(!(cd_k_train(p, data, cfg, d) == persistent));
}

TEST_CASE("algorithm names") {
    for (Algorithm a : {Algorithm::CD, Algorithm::GS, Algorithm::BGF, Algorithm::ML})
        CHECK(parse_algorithm(to_string(a)) == a);
    CHECK(parse_algorithm("BGF") == Algorithm::BGF);
    CHECK_THROWS_AS(parse_algorithm("pcd"), std::invalid_argument);
}

TEST_CASE("dimension errors") {
    Rng rng(35);
    const std::vector<BitVector> data{{1, 0, 1}};
    TrainConfig cfg;
    CHECK_THROWS_AS(cd_k_train(RbmParams::zeros(4, 2), data, cfg, rng), DimensionError);
    CHECK_THROWS_AS(cd_k_train(RbmParams::zeros(3, 2), {}, cfg, rng), std::invalid_argument);
}

}  // TEST_SUITE
