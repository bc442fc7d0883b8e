#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "isingrbm/data_io.hpp"
#include "isingrbm/hw_model.hpp"
#include "isingrbm/rbm.hpp"
#include "isingrbm/rng.hpp"
#include "isingrbm/trainers.hpp"

namespace isingrbm {

// ---------------------------------------------------------------- AIS

enum class AisBase { Uniform, FittedVisibleBias };

struct AisConfig {
    std::size_t n_temps = 1000;  // inverse temperatures, both endpoints included
    std::size_t n_runs = 100;
    AisBase base = AisBase::Uniform;
    Eigen::VectorXd base_visible_bias;  // used when base == FittedVisibleBias

    void validate(std::size_t visible) const;
};

struct AisResult {
    double log_z = 0.0;
    double std_error = 0.0;     // of log_z, delta method
    std::size_t dropped = 0;    // runs with a non-finite weight
    std::size_t used = 0;
};

// Visible biases of the product-of-Bernoulli base matched to the data
// marginals, with pseudo-counts to keep them finite.
Eigen::VectorXd fit_base_visible_bias(std::span<const BitVector> data, double pseudo_count = 1.0);

// Annealed importance sampling from the base-rate model (zero weights and
// hidden biases) to `params` along the geometric path. Throws
// std::runtime_error when every run is dropped.
AisResult ais_log_partition(const RbmParams& params, const AisConfig& cfg, Rng& rng);

// ---------------------------------------------------------------- likelihood & KL

double avg_log_prob(const RbmParams& params, std::span<const BitVector> data, double log_z);

// KL(p || q) in nats. 0 log(0/q) = 0; +infinity when q = 0 where p > 0.
double kl_divergence(std::span<const double> p_true, std::span<const double> q_model);

// Trailing moving average: element t averages the last min(t+1, window)
// inputs.
std::vector<double> moving_average(std::span<const double> values, std::size_t window);

struct EvalReport {
    double avg_log_prob = 0.0;
    double log_z = 0.0;
    double log_z_stderr = 0.0;
    std::optional<double> kl;
    std::optional<double> accuracy;
    std::vector<std::pair<std::size_t, double>> trajectory;  // (iteration, avg log prob)
    std::vector<double> smoothed;                            // moving average of trajectory
};

inline constexpr std::size_t kSmoothingWindow = 10;

// Average log-probability of `data` at every snapshot, with the exact
// partition function when enumerable and AIS otherwise. `table` (when
// non-empty) adds KL(table || final model).
EvalReport evaluate_trace(const TrainTrace& trace, std::span<const BitVector> data, std::span<const double> table,
                          const AisConfig& ais, Rng& rng, std::size_t window = kSmoothingWindow);

// ---------------------------------------------------------------- bias experiment

enum class BiasAlgorithm { ML, CD1, CDk, BGF };

std::string to_string(BiasAlgorithm algo);
BiasAlgorithm parse_bias_algorithm(const std::string& name);

struct BiasBenchConfig {
    std::size_t n_distributions = 60;
    std::size_t samples_per_dist = 100;
    std::size_t visible = 12;
    std::size_t hidden = 4;
    std::size_t iterations = 1000;
    std::size_t runs = 400;
    std::vector<BiasAlgorithm> algorithms = {BiasAlgorithm::ML, BiasAlgorithm::CD1, BiasAlgorithm::BGF};

    double ml_alpha = 0.1;
    double cd_alpha = 0.1;
    // Per-sample rate; 0 selects cd_alpha / samples_per_dist.
    double bgf_alpha = 0.0;
    std::size_t cdk_k = 10;
    std::size_t bgf_particles = 10;
    std::size_t bgf_anneal_passes = 5;
    double init_sd = 0.01;
    HwConfig hw;
    std::size_t workers = 1;

    void validate() const;
    double effective_bgf_alpha() const noexcept;
};

struct KlRecord {
    std::size_t distribution = 0;
    std::size_t run = 0;
    BiasAlgorithm algo = BiasAlgorithm::ML;
    double kl = 0.0;
};

struct BiasBenchResult {
    std::vector<KlRecord> records;  // ordered by (distribution, run, algorithm)
    std::vector<std::pair<BiasAlgorithm, std::vector<double>>> sorted_kl;

    const std::vector<double>& kl_of(BiasAlgorithm algo) const;
    double median(BiasAlgorithm algo) const;
    // (kl, cumulative fraction) for every sorted value.
    std::vector<std::pair<double, double>> cdf(BiasAlgorithm algo) const;
};

// Every (distribution, run) pair starts all algorithms from the same random
// initial model. Jobs use streams derived from `seed`, so the result does
// not depend on cfg.workers.
BiasBenchResult bias_experiment(const BiasBenchConfig& cfg, std::uint64_t seed);

double median(std::vector<double> values);

// ---------------------------------------------------------------- classifier head

struct LogisticHead {
    Eigen::MatrixXd weights;  // features x classes
    Eigen::VectorXd bias;
    std::vector<double> loss_history;  // per epoch, including the L2 term

    std::size_t classes() const noexcept { return static_cast<std::size_t>(bias.size()); }
    std::vector<int> predict(const Eigen::MatrixXd& features) const;
};

struct HeadOptions {
    double learning_rate = 0.5;
    std::size_t epochs = 200;
};

// Multinomial logistic regression, full-batch gradient descent on mean
// cross-entropy + reg/2 |W|^2. Rows of `features` are samples.
LogisticHead classifier_head_train(const Eigen::MatrixXd& features, std::span<const int> labels, double reg,
                                   const HeadOptions& options = {});
double classifier_accuracy(const LogisticHead& head, const Eigen::MatrixXd& features, std::span<const int> labels);

// Rows are hidden_conditional(params, v) for each sample.
Eigen::MatrixXd hidden_features(const RbmParams& params, std::span<const BitVector> data);

// ---------------------------------------------------------------- noise sweep

struct NoisePoint {
    double variation_rms = 0.0;
    double noise_rms = 0.0;
    bool operator==(const NoisePoint&) const = default;
};

// {3,10,17,24,30}% x {3,10,17,24,30}%.
std::vector<NoisePoint> noise_grid_25();

struct SweepSpec {
    TrainConfig train;
    HwConfig hw;  // variation_rms / noise_rms are overridden per grid point
    std::size_t hidden = 4;
    double init_sd = 0.01;
    std::size_t seeds = 1;
    std::size_t window = kSmoothingWindow;
    AisConfig ais;
    std::size_t workers = 1;
};

struct SweepResult {
    NoisePoint point;
    std::size_t seed_index = 0;
    std::uint64_t seed = 0;
    EvalReport report;
};

// Runs spec.train at every grid point for spec.seeds repetitions. Repetition
// r uses the same training and substrate streams at every grid point.
// Results are ordered by (grid point, repetition).
std::vector<SweepResult> noise_sweep(std::span<const NoisePoint> grid, const SweepSpec& spec,
                                     std::span<const BitVector> data, std::span<const double> table,
                                     std::uint64_t seed);

// Stream of repetition r for sweeps and single training runs.
Rng run_stream(std::uint64_t seed, std::size_t repetition);
// Stream drawing the initial model of repetition r.
Rng init_stream(std::uint64_t seed, std::size_t repetition);
// Substrate seed for repetition r.
std::uint64_t substrate_seed(std::uint64_t seed, std::size_t repetition);

}  // namespace isingrbm
