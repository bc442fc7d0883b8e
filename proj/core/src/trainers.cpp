#include "isingrbm/trainers.hpp"

#include <algorithm>
#include <cctype>
#include <numeric>
#include <stdexcept>
#include <string>

namespace isingrbm {

namespace {

// Stream key for substrate construction (static variation, particles).
constexpr std::uint64_t kSubstrateStream = 0x5ab5'7a7e;

void check_data(std::span<const BitVector> data, std::size_t visible) {
    if (data.empty()) throw std::invalid_argument("training data is empty");
    for (std::size_t t = 0; t < data.size(); ++t)
        if (data[t].size() != visible)
            throw DimensionError("training sample " + std::to_string(t), visible, data[t].size());
}

std::vector<std::size_t> epoch_order(std::size_t n, bool shuffle, Rng& rng) {
    std::vector<std::size_t> order(n);
    std::iota(order.begin(), order.end(), std::size_t{0});
    if (shuffle) shuffle_indices(order.data(), order.size(), rng);
    return order;
}

std::vector<BitVector> init_particles(std::size_t hidden, std::size_t count, Rng& rng) {
    std::vector<BitVector> out;
    out.reserve(count);
    for (std::size_t k = 0; k < count; ++k) {
        BitVector h(hidden);
        for (std::size_t j = 0; j < hidden; ++j) h.set(j, rng.uniform() < 0.5);
        out.push_back(std::move(h));
    }
    return out;
}

bool snapshot_due(std::size_t iteration, const TrainConfig& cfg) {
    return cfg.snapshot_every > 0 && iteration % cfg.snapshot_every == 0 && iteration != cfg.iterations;
}

void finish(TrainTrace& trace, const RbmParams& final, const TrainConfig& cfg) {
    trace.final = final;
    if (trace.snapshots.empty() || trace.snapshots.back().iteration != cfg.iterations)
        trace.snapshots.push_back({cfg.iterations, final});
}

// Statistics of one minibatch: sums of positive minus negative products.
struct PhaseDelta {
    Eigen::MatrixXd weights;
    Eigen::VectorXd visible_bias;
    Eigen::VectorXd hidden_bias;

    PhaseDelta(std::size_t m, std::size_t n)
        : weights(Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n))),
          visible_bias(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m))),
          hidden_bias(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(n))) {}

    void add(const BitVector& v, const BitVector& h, double sign) {
        for (std::size_t i = 0; i < v.size(); ++i) {
            if (!v[i]) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            visible_bias(ii) += sign;
            for (std::size_t j = 0; j < h.size(); ++j)
                if (h[j]) weights(ii, static_cast<Eigen::Index>(j)) += sign;
        }
        for (std::size_t j = 0; j < h.size(); ++j)
            if (h[j]) hidden_bias(static_cast<Eigen::Index>(j)) += sign;
    }

    void apply(RbmParams& params, double alpha, std::size_t batch) const {
        const double scale = alpha / static_cast<double>(batch);
        params.weights += scale * weights;
        params.visible_bias += scale * visible_bias;
        params.hidden_bias += scale * hidden_bias;
    }
};

// Algorithm 1 with the sampling passes delegated to `sampler`, which
// exposes hidden(v), visible(h) and begin_minibatch(params).
template <typename Sampler>
TrainTrace contrastive_train(const RbmParams& initial, std::span<const BitVector> data, const TrainConfig& cfg,
                             Rng& rng, Sampler& sampler) {
    initial.validate();
    cfg.validate();
    const std::size_t m = initial.visible_size();
    const std::size_t n = initial.hidden_size();
    check_data(data, m);

    TrainTrace trace;
    trace.rng_seed = rng.seed();
    RbmParams params = initial;
    trace.snapshots.push_back({0, params});

    std::vector<BitVector> particles;
    std::size_t next_particle = 0;
    if (cfg.persistent) particles = init_particles(n, cfg.particles, rng);

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const auto order = epoch_order(data.size(), cfg.shuffle, rng);
        for (std::size_t start = 0; start < order.size(); start += cfg.batch_size) {
            const std::size_t stop = std::min(order.size(), start + cfg.batch_size);
            sampler.begin_minibatch(params);
            PhaseDelta delta(m, n);
            for (std::size_t b = start; b < stop; ++b) {
                const BitVector& v_pos = data[order[b]];
                const BitVector h_pos = sampler.hidden(v_pos);
                std::size_t slot = 0;
                BitVector h_neg = h_pos;
                if (cfg.persistent) {
                    slot = next_particle;
                    next_particle = (next_particle + 1) % particles.size();
                    h_neg = particles[slot];
                }
                BitVector v_neg;
                for (std::size_t step = 0; step < cfg.k; ++step) {
                    v_neg = sampler.visible(h_neg);
                    h_neg = sampler.hidden(v_neg);
                }
                if (cfg.persistent) particles[slot] = h_neg;
                delta.add(v_pos, h_pos, 1.0);
                delta.add(v_neg, h_neg, -1.0);
            }
            delta.apply(params, cfg.alpha, stop - start);
        }
        if (snapshot_due(it, cfg)) trace.snapshots.push_back({it, params});
    }
    finish(trace, params, cfg);
    return trace;
}

struct SoftwareSampler {
    const RbmParams* params = nullptr;
    Rng* rng = nullptr;

    void begin_minibatch(const RbmParams& p) { params = &p; }
    BitVector hidden(const BitVector& v) { return sample_bernoulli(hidden_conditional(*params, v), *rng); }
    BitVector visible(const BitVector& h) { return sample_bernoulli(visible_conditional(*params, h), *rng); }
};

struct SubstrateSampler {
    HwState hw;
    const HwConfig* cfg = nullptr;
    Rng* rng = nullptr;

    void begin_minibatch(const RbmParams& p) { hw_program(hw, p, *cfg); }
    BitVector hidden(const BitVector& v) {
        return hw_sample_pass(hw, v, PassDirection::VisibleToHidden, *cfg, *rng);
    }
    BitVector visible(const BitVector& h) {
        return hw_sample_pass(hw, h, PassDirection::HiddenToVisible, *cfg, *rng);
    }
};

}  // namespace

std::string_view to_string(Algorithm algo) noexcept {
    switch (algo) {
        case Algorithm::CD: return "cd";
        case Algorithm::GS: return "gs";
        case Algorithm::BGF: return "bgf";
        case Algorithm::ML: return "ml";
    }
    return "unknown";
}

Algorithm parse_algorithm(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    if (lower == "cd") return Algorithm::CD;
    if (lower == "gs") return Algorithm::GS;
    if (lower == "bgf") return Algorithm::BGF;
    if (lower == "ml") return Algorithm::ML;
    throw std::invalid_argument("unknown training algorithm '" + std::string(name) + "'");
}

void TrainConfig::validate() const {
    if (!(alpha >= 0.0)) throw std::invalid_argument("alpha must be >= 0");
    if (k < 1) throw std::invalid_argument("k must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("batch_size must be >= 1");
    if (particles < 1) throw std::invalid_argument("particles must be >= 1");
    if (anneal_passes < 1) throw std::invalid_argument("anneal_passes must be >= 1");
    if (algo == Algorithm::BGF && batch_size != 1)
        throw std::invalid_argument("BGF updates in place after every sample; batch_size must be 1, got " +
                                    std::to_string(batch_size));
}

bool TrainTrace::operator==(const TrainTrace& other) const {
    if (snapshots.size() != other.snapshots.size() || rng_seed != other.rng_seed || !(final == other.final))
        return false;
    for (std::size_t s = 0; s < snapshots.size(); ++s)
        if (snapshots[s].iteration != other.snapshots[s].iteration ||
            !(snapshots[s].params == other.snapshots[s].params))
            return false;
    return true;
}

RbmParams initial_params(std::size_t visible, std::size_t hidden, Rng& rng, double sd) {
    return RbmParams::random(visible, hidden, sd, rng);
}

TrainTrace cd_k_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg, Rng& rng) {
    SoftwareSampler sampler{nullptr, &rng};
    return contrastive_train(params, data, cfg, rng, sampler);
}

TrainTrace gs_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg,
                    const HwConfig& hw_cfg, Rng& rng) {
    hw_cfg.validate();
    Rng substrate_rng = Rng::derive(hw_cfg.seed, {kSubstrateStream});
    SubstrateSampler sampler{hw_init(params, hw_cfg, 1, substrate_rng), &hw_cfg, &rng};
    return contrastive_train(params, data, cfg, rng, sampler);
}

TrainTrace bgf_train(HwState& hw, std::span<const BitVector> data, const TrainConfig& cfg, const HwConfig& hw_cfg,
                     Rng& rng, const TrainHooks& hooks) {
    cfg.validate();
    hw_cfg.validate();
    if (cfg.batch_size != 1)
        throw std::invalid_argument("BGF requires batch_size 1, got " + std::to_string(cfg.batch_size));
    const std::size_t m = hw.visible_size();
    const std::size_t n = hw.hidden_size();
    check_data(data, m);
    if (hw.particles.empty()) throw std::invalid_argument("BGF substrate has no particles");

    TrainTrace trace;
    trace.rng_seed = rng.seed();
    trace.snapshots.push_back({0, hw_readout(hw, hw_cfg)});

    const double magnitude = cfg.alpha * hw_cfg.pump_step;
    auto& w = hw.params.weights;
    auto& bv = hw.params.visible_bias;
    auto& bh = hw.params.hidden_bias;

    auto pump = [&](const BitVector& v, const BitVector& h, PumpDirection dir) {
        if (magnitude == 0.0) return;
        for (std::size_t i = 0; i < m; ++i) {
            if (!v[i]) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            bv(ii) = charge_pump_update(bv(ii), dir, magnitude, hw.visible_bias_gain(ii), hw_cfg);
            for (std::size_t j = 0; j < n; ++j) {
                if (!h[j]) continue;
                const auto jj = static_cast<Eigen::Index>(j);
                w(ii, jj) = charge_pump_update(w(ii, jj), dir, magnitude, hw.static_gain(ii, jj), hw_cfg);
            }
        }
        for (std::size_t j = 0; j < n; ++j) {
            if (!h[j]) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            bh(jj) = charge_pump_update(bh(jj), dir, magnitude, hw.hidden_bias_gain(jj), hw_cfg);
        }
    };

    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        const auto order = epoch_order(data.size(), cfg.shuffle, rng);
        for (std::size_t idx : order) {
            const BitVector& v_pos = data[idx];
            // Positive phase under W^t; one settle pass.
            const BitVector h_pos = hw_sample_pass(hw, v_pos, PassDirection::VisibleToHidden, hw_cfg, rng);
            pump(v_pos, h_pos, PumpDirection::Increment);
            if (hooks.before_negative_phase) hooks.before_negative_phase(hw);

            // Negative phase under W^{t+1/2}.
            const std::size_t slot = hw.next_particle;
            hw.next_particle = (hw.next_particle + 1) % hw.particles.size();
            if (hooks.on_particle) hooks.on_particle(slot);
            const JointSample neg = anneal_run(hw, slot, cfg.anneal_passes, hw_cfg, rng);
            pump(neg.visible, neg.hidden, PumpDirection::Decrement);
        }
        if (snapshot_due(it, cfg)) trace.snapshots.push_back({it, hw_readout(hw, hw_cfg)});
    }
    finish(trace, hw_readout(hw, hw_cfg), cfg);
    return trace;
}

TrainTrace bgf_train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg,
                     const HwConfig& hw_cfg, Rng& rng) {
    hw_cfg.validate();
    Rng substrate_rng = Rng::derive(hw_cfg.seed, {kSubstrateStream});
    HwState hw = hw_init(params, hw_cfg, cfg.particles, substrate_rng);
    return bgf_train(hw, data, cfg, hw_cfg, rng);
}

TrainTrace ml_train(const RbmParams& initial, std::span<const BitVector> data, const TrainConfig& cfg) {
    initial.validate();
    cfg.validate();
    check_data(data, initial.visible_size());
    check_enumerable(initial, kDefaultEnumerationLimit);

    TrainTrace trace;
    RbmParams params = initial;
    trace.snapshots.push_back({0, params});
    for (std::size_t it = 1; it <= cfg.iterations; ++it) {
        if (cfg.alpha != 0.0) {
            const GradientEstimate g = exact_gradient(params, data);
            params.weights += cfg.alpha * g.weights;
            params.visible_bias += cfg.alpha * g.visible_bias;
            params.hidden_bias += cfg.alpha * g.hidden_bias;
        }
        if (snapshot_due(it, cfg)) trace.snapshots.push_back({it, params});
    }
    finish(trace, params, cfg);
    return trace;
}

TrainTrace train(const RbmParams& params, std::span<const BitVector> data, const TrainConfig& cfg,
                 const HwConfig& hw_cfg, Rng& rng) {
    switch (cfg.algo) {
        case Algorithm::CD: return cd_k_train(params, data, cfg, rng);
        case Algorithm::GS: return gs_train(params, data, cfg, hw_cfg, rng);
        case Algorithm::BGF: return bgf_train(params, data, cfg, hw_cfg, rng);
        case Algorithm::ML: {
            TrainTrace t = ml_train(params, data, cfg);
            t.rng_seed = rng.seed();
            return t;
        }
    }
    throw std::logic_error("unhandled algorithm");
}

}  // namespace isingrbm
