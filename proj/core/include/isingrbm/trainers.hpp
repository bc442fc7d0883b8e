#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <span>
#include <string_view>
#include <vector>

#include "isingrbm/hw_model.hpp"
#include "isingrbm/rbm.hpp"
#include "isingrbm/rng.hpp"

namespace isingrbm {

enum class Algorithm { CD, GS, BGF, ML };

std::string_view to_string(Algorithm algo) noexcept;
// Accepts "cd", "gs", "bgf", "ml" (case-insensitive).
Algorithm parse_algorithm(std::string_view name);

// One iteration is one pass over the training set. CD and GS update once
// per minibatch, BGF once per sample, ML once per iteration.
struct TrainConfig {
    Algorithm algo = Algorithm::CD;
    double alpha = 0.1;
    std::size_t k = 1;
    std::size_t batch_size = 1;
    std::size_t iterations = 1;
    std::size_t particles = 1;
    bool persistent = false;
    std::size_t snapshot_every = 0;  // 0 records only the initial and final states
    std::size_t anneal_passes = 5;   // BGF negative-phase pass pairs
    bool shuffle = true;

    void validate() const;
};

struct Snapshot {
    std::size_t iteration = 0;
    RbmParams params;
};

struct TrainTrace {
    std::vector<Snapshot> snapshots;
    RbmParams final;
    std::uint64_t rng_seed = 0;

    bool operator==(const TrainTrace& other) const;
};

// Instrumentation points; all optional.
struct TrainHooks {
    // BGF: called after the positive-phase increments of a sample and before
    // its negative phase is sampled.
    std::function<void(const HwState&)> before_negative_phase;
    // BGF: called with the particle index used for each negative phase.
    std::function<void(std::size_t)> on_particle;
};

// Gaussian(0, sd) weights, zero biases.
RbmParams initial_params(std::size_t visible, std::size_t hidden, Rng& rng, double sd = 0.01);

TrainTrace cd_k_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg, Rng& rng);

// Host-side updates identical to cd_k_train; every sampling pass runs on the
// substrate model, re-programmed at each minibatch. Static variation is
// drawn once from a stream derived from hw_cfg.seed.
TrainTrace gs_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg,
                    const HwConfig& hw_cfg, Rng& rng);

// In-substrate half-step updates through the charge pump, minibatch 1.
// `hw` is updated in place; snapshots are ADC readouts.
TrainTrace bgf_train(HwState& hw, std::span<const BitVector> data, const TrainConfig& cfg, const HwConfig& hw_cfg,
                     Rng& rng, const TrainHooks& hooks = {});

// Programs a fresh substrate (variation and particles from hw_cfg.seed) and
// runs bgf_train on it.
TrainTrace bgf_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg,
                     const HwConfig& hw_cfg, Rng& rng);

// Full-batch ascent on the exact log-likelihood gradient.
TrainTrace ml_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg);

// Dispatches on cfg.algo.
TrainTrace train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg,
                 const HwConfig& hw_cfg, Rng& rng);

}  // namespace isingrbm
