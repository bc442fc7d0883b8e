#include "isingrbm/hw_model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>
#include <string>

namespace isingrbm {

HwConfig HwConfig::ideal() {
    HwConfig cfg;
    cfg.w_min = -1e6;
    cfg.w_max = 1e6;
    cfg.readout_bits = 0;
    cfg.pump_mode = PumpMode::Ideal;
    return cfg;
}

void HwConfig::validate() const {
    auto fail = [](const std::string& what) { throw std::invalid_argument("invalid hardware config: " + what); };
    if (!(variation_rms >= 0.0)) fail("variation_rms must be >= 0");
    if (!(noise_rms >= 0.0)) fail("noise_rms must be >= 0");
    if (!(gain_variation_rms >= 0.0)) fail("gain_variation_rms must be >= 0");
    if (!(w_min < w_max)) fail("w_min must be below w_max");
    if (!(pump_step > 0.0)) fail("pump_step must be > 0");
    if (readout_bits < 0 || readout_bits > 16) fail("readout_bits must be in 0..16");
    if (!(anneal_t_start >= 1.0)) fail("anneal_t_start must be >= 1");
    if (!std::isfinite(sigmoid_gain) || !std::isfinite(sigmoid_offset)) fail("sigmoid parameters must be finite");
}

bool HwState::operator==(const HwState& other) const {
    auto same = [](const auto& a, const auto& b) {
        return a.rows() == b.rows() && a.cols() == b.cols() && a == b;
    };
    return params == other.params && same(static_gain, other.static_gain) &&
           same(visible_bias_gain, other.visible_bias_gain) && same(hidden_bias_gain, other.hidden_bias_gain) &&
           same(visible_node_gain, other.visible_node_gain) && same(hidden_node_gain, other.hidden_node_gain) &&
           particles == other.particles && next_particle == other.next_particle;
}

namespace {

double clip(double x, const HwConfig& cfg) noexcept { return std::clamp(x, cfg.w_min, cfg.w_max); }

template <typename Derived>
void draw_gains(Eigen::DenseBase<Derived>& out, double sd, double floor, Rng& rng) {
    for (Eigen::Index i = 0; i < out.rows(); ++i)
        for (Eigen::Index j = 0; j < out.cols(); ++j) out(i, j) = std::max(floor, rng.normal(1.0, sd));
}

}  // namespace

void hw_program(HwState& hw, const RbmParams& params, const HwConfig& cfg) {
    params.validate();
    if (params.visible_size() != static_cast<std::size_t>(hw.static_gain.rows()))
        throw DimensionError("programmed visible size", static_cast<std::size_t>(hw.static_gain.rows()),
                             params.visible_size());
    if (params.hidden_size() != static_cast<std::size_t>(hw.static_gain.cols()))
        throw DimensionError("programmed hidden size", static_cast<std::size_t>(hw.static_gain.cols()),
                             params.hidden_size());
    hw.params.weights = params.weights.unaryExpr([&](double w) { return clip(w, cfg); });
    hw.params.visible_bias = params.visible_bias.unaryExpr([&](double w) { return clip(w, cfg); });
    hw.params.hidden_bias = params.hidden_bias.unaryExpr([&](double w) { return clip(w, cfg); });
}

HwState hw_init(const RbmParams& params, const HwConfig& cfg, std::size_t particles, Rng& rng) {
    params.validate();
    cfg.validate();
    if (particles < 1) throw std::invalid_argument("hw_init needs at least one particle");
    const auto m = static_cast<Eigen::Index>(params.visible_size());
    const auto n = static_cast<Eigen::Index>(params.hidden_size());

    HwState hw;
    hw.static_gain.resize(m, n);
    hw.visible_bias_gain.resize(m);
    hw.hidden_bias_gain.resize(n);
    hw.visible_node_gain.resize(m);
    hw.hidden_node_gain.resize(n);
    draw_gains(hw.static_gain, cfg.variation_rms, kMinStaticGain, rng);
    draw_gains(hw.visible_bias_gain, cfg.variation_rms, kMinStaticGain, rng);
    draw_gains(hw.hidden_bias_gain, cfg.variation_rms, kMinStaticGain, rng);
    draw_gains(hw.visible_node_gain, cfg.gain_variation_rms, kMinStaticGain, rng);
    draw_gains(hw.hidden_node_gain, cfg.gain_variation_rms, kMinStaticGain, rng);
    hw_program(hw, params, cfg);

    hw.particles.reserve(particles);
    for (std::size_t k = 0; k < particles; ++k) {
        BitVector h(params.hidden_size());
        for (std::size_t j = 0; j < h.size(); ++j) h.set(j, rng.uniform() < 0.5);
        hw.particles.push_back(std::move(h));
    }
    return hw;
}

double hw_sigmoid(double x, double gain, const HwConfig& cfg) noexcept {
    return 1.0 / (1.0 + std::exp(-(cfg.sigmoid_gain * gain * (x - cfg.sigmoid_offset))));
}

PassActivations hw_activations(const HwState& hw, const BitVector& clamped, PassDirection direction,
                               const HwConfig& cfg, Rng& rng) {
    const bool to_hidden = direction == PassDirection::VisibleToHidden;
    const std::size_t source = to_hidden ? hw.visible_size() : hw.hidden_size();
    if (clamped.size() != source)
        throw DimensionError(to_hidden ? "clamped visible state" : "clamped hidden state", source, clamped.size());

    const auto& w = hw.params.weights;
    const auto& g = hw.static_gain;
    PassActivations out;
    // Same accumulation order as hidden_activation / visible_activation, so
    // unit gains reproduce the ideal conditionals bit for bit.
    if (to_hidden) {
        out.noiseless = hw.params.hidden_bias.cwiseProduct(hw.hidden_bias_gain);
        for (std::size_t i = 0; i < clamped.size(); ++i) {
            if (!clamped[i]) continue;
            const auto ii = static_cast<Eigen::Index>(i);
            out.noiseless += w.row(ii).cwiseProduct(g.row(ii)).transpose();
        }
    } else {
        out.noiseless = hw.params.visible_bias.cwiseProduct(hw.visible_bias_gain);
        for (std::size_t j = 0; j < clamped.size(); ++j) {
            if (!clamped[j]) continue;
            const auto jj = static_cast<Eigen::Index>(j);
            out.noiseless += w.col(jj).cwiseProduct(g.col(jj));
        }
    }

    const Eigen::Index targets = out.noiseless.size();
    out.noise = Eigen::VectorXd::Zero(targets);
    if (cfg.noise_rms > 0.0 && targets > 0) {
        out.activation_scale = std::sqrt(out.noiseless.squaredNorm() / static_cast<double>(targets));
        const double sd = cfg.noise_rms * out.activation_scale;
        for (Eigen::Index t = 0; t < targets; ++t) out.noise(t) = sd * rng.normal();
    } else if (targets > 0) {
        out.activation_scale = std::sqrt(out.noiseless.squaredNorm() / static_cast<double>(targets));
    }
    return out;
}

BitVector hw_sample_pass(const HwState& hw, const BitVector& clamped, PassDirection direction, const HwConfig& cfg,
                         Rng& rng, double temperature) {
    const PassActivations act = hw_activations(hw, clamped, direction, cfg, rng);
    const Eigen::VectorXd& node_gain =
        direction == PassDirection::VisibleToHidden ? hw.hidden_node_gain : hw.visible_node_gain;
    BitVector out(static_cast<std::size_t>(act.noiseless.size()));
    for (Eigen::Index t = 0; t < act.noiseless.size(); ++t) {
        const double x = cfg.noise_rms > 0.0 ? act.noiseless(t) + act.noise(t) : act.noiseless(t);
        const double gain = temperature == 1.0 ? node_gain(t) : node_gain(t) / temperature;
        out.set(static_cast<std::size_t>(t), rng.uniform() < hw_sigmoid(x, gain, cfg));
    }
    return out;
}

double charge_pump_update(double w, PumpDirection direction, double magnitude, double gain,
                          const HwConfig& cfg) noexcept {
    const double span = cfg.w_max - cfg.w_min;
    const double step = gain * magnitude;
    double next = w;
    if (cfg.pump_mode == PumpMode::Ideal) {
        next = direction == PumpDirection::Increment ? w + 0.5 * step : w - 0.5 * step;
    } else if (direction == PumpDirection::Increment) {
        next = w + step * (cfg.w_max - w) / span;
    } else {
        next = w - step * (w - cfg.w_min) / span;
    }
    return clip(next, cfg);
}

double anneal_temperature(std::size_t index, std::size_t passes, const HwConfig& cfg) noexcept {
    if (passes <= 1 || cfg.anneal_t_start == 1.0) return 1.0;
    const double frac = static_cast<double>(passes - 1 - index) / static_cast<double>(passes - 1);
    return std::pow(cfg.anneal_t_start, frac);
}

JointSample anneal_run(HwState& hw, std::size_t particle_index, std::size_t passes, const HwConfig& cfg, Rng& rng) {
    if (particle_index >= hw.particles.size())
        throw std::out_of_range("particle index " + std::to_string(particle_index) + " out of range for " +
                                std::to_string(hw.particles.size()) + " particles");
    if (passes < 1) throw std::invalid_argument("anneal_run needs at least one pass");
    JointSample s{BitVector(hw.visible_size()), hw.particles[particle_index]};
    for (std::size_t k = 0; k < passes; ++k) {
        const double t = anneal_temperature(k, passes, cfg);
        s.visible = hw_sample_pass(hw, s.hidden, PassDirection::HiddenToVisible, cfg, rng, t);
        s.hidden = hw_sample_pass(hw, s.visible, PassDirection::VisibleToHidden, cfg, rng, t);
    }
    hw.particles[particle_index] = s.hidden;
    return s;
}

double quantize(double x, const HwConfig& cfg) noexcept {
    if (cfg.readout_bits <= 0) return x;
    const double intervals = std::ldexp(1.0, cfg.readout_bits);
    const double lsb = (cfg.w_max - cfg.w_min) / intervals;
    const double code = std::clamp(std::round((x - cfg.w_min) / lsb), 0.0, intervals);
    return code == intervals ? cfg.w_max : cfg.w_min + code * lsb;
}

RbmParams hw_readout(const HwState& hw, const HwConfig& cfg) {
    RbmParams out = hw.params;
    if (cfg.readout_bits > 0) {
        auto q = [&](double x) { return quantize(x, cfg); };
        out.weights = out.weights.unaryExpr(q);
        out.visible_bias = out.visible_bias.unaryExpr(q);
        out.hidden_bias = out.hidden_bias.unaryExpr(q);
    }
    return out;
}

}  // namespace isingrbm
