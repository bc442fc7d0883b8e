#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "isingrbm/rbm.hpp"
#include "isingrbm/rng.hpp"

namespace isingrbm {

enum class PumpMode {
    // Step scales with the remaining headroom to the rail being approached.
    LinearHeadroom,
    // Step uses the mid-rail headroom factor (1/2) everywhere, then clips.
    Ideal,
};

enum class PassDirection { VisibleToHidden, HiddenToVisible };

enum class PumpDirection { Increment, Decrement };

// Behavioral parameters of the analog substrate. Fractions are relative RMS.
struct HwConfig {
    double variation_rms = 0.0;       // static, multiplicative on couplers
    double noise_rms = 0.0;           // dynamic, additive on activations
    double sigmoid_gain = 1.0;        // c1
    double sigmoid_offset = 0.0;      // c2
    double gain_variation_rms = 0.0;  // per-node spread of c1
    double w_min = -8.0;
    double w_max = 8.0;
    // Charge-pump transfer ratio: one pump event of learning rate a moves a
    // mid-rail weight by a * pump_step / 2.
    double pump_step = 2.0;
    PumpMode pump_mode = PumpMode::LinearHeadroom;
    int readout_bits = 8;  // 0 = ideal readout
    // Geometric temperature ladder for anneal_run, from anneal_t_start down
    // to 1. A start of 1 gives the flat schedule.
    double anneal_t_start = 1.0;
    std::uint64_t seed = 0;

    // All nonidealities off, rails wide enough never to clip.
    static HwConfig ideal();

    // Throws std::invalid_argument naming the violated field.
    void validate() const;
};

// Mutable in-substrate model for one training chain.
struct HwState {
    RbmParams params;                  // stored (programmed) values, within rails
    Eigen::MatrixXd static_gain;       // per coupler, mean 1
    Eigen::VectorXd visible_bias_gain; // per bias clamp unit
    Eigen::VectorXd hidden_bias_gain;
    Eigen::VectorXd visible_node_gain; // per-node c1 multiplier
    Eigen::VectorXd hidden_node_gain;
    std::vector<BitVector> particles;  // persistent hidden states
    std::size_t next_particle = 0;

    std::size_t visible_size() const noexcept { return params.visible_size(); }
    std::size_t hidden_size() const noexcept { return params.hidden_size(); }
    std::size_t particle_count() const noexcept { return particles.size(); }

    bool operator==(const HwState& other) const;
};

inline constexpr double kMinStaticGain = 0.05;

HwState hw_init(const RbmParams& params, const HwConfig& cfg, std::size_t particles, Rng& rng);

// Re-program the stored values (clipped to the rails), keeping the physical
// variation factors and particles.
void hw_program(HwState& hw, const RbmParams& params, const HwConfig& cfg);

double hw_sigmoid(double x, double gain, const HwConfig& cfg) noexcept;

// Activations seen by the target side of one pass.
struct PassActivations {
    Eigen::VectorXd noiseless;
    Eigen::VectorXd noise;
    double activation_scale = 0.0;  // RMS of `noiseless`
};

PassActivations hw_activations(const HwState& hw, const BitVector& clamped, PassDirection direction,
                               const HwConfig& cfg, Rng& rng);

// One clamped pass through the coupling array, node sigmoids and
// comparators. `temperature` divides the node gain.
BitVector hw_sample_pass(const HwState& hw, const BitVector& clamped, PassDirection direction,
                         const HwConfig& cfg, Rng& rng, double temperature = 1.0);

// In-place weight adjustment f_ij. A mid-rail weight moves by
// gain * magnitude / 2; the result stays within [w_min, w_max].
double charge_pump_update(double w, PumpDirection direction, double magnitude, double gain,
                          const HwConfig& cfg) noexcept;

// Temperature of pass `index` out of `passes` on the configured ladder.
double anneal_temperature(std::size_t index, std::size_t passes, const HwConfig& cfg) noexcept;

struct JointSample {
    BitVector visible;
    BitVector hidden;
};

// Loads particle `particle_index` into the hidden units, runs `passes`
// hidden->visible->hidden pass pairs and stores the final hidden state back.
JointSample anneal_run(HwState& hw, std::size_t particle_index, std::size_t passes, const HwConfig& cfg,
                       Rng& rng);

// ADC readout of the stored values. With readout_bits = b > 0 the rail span
// is split into 2^b equal intervals and each value rounds to the nearest
// interval edge, so both rails are representable exactly.
RbmParams hw_readout(const HwState& hw, const HwConfig& cfg);

double quantize(double x, const HwConfig& cfg) noexcept;

}  // namespace isingrbm
