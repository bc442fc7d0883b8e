#pragma once

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "isingrbm/errors.hpp"
#include "isingrbm/rng.hpp"

namespace isingrbm {

// Fixed-length vector of {0,1} unit states.
class BitVector {
public:
    BitVector() = default;
    explicit BitVector(std::size_t n, std::uint8_t fill = 0);
    // Throws std::invalid_argument if any element is not 0 or 1.
    explicit BitVector(std::vector<std::uint8_t> bits);
    BitVector(std::initializer_list<int> bits);

    std::size_t size() const noexcept { return bits_.size(); }
    bool empty() const noexcept { return bits_.empty(); }
    std::uint8_t operator[](std::size_t i) const noexcept { return bits_[i]; }
    void set(std::size_t i, bool on) noexcept { bits_[i] = on ? 1 : 0; }
    std::span<const std::uint8_t> bits() const noexcept { return bits_; }
    std::size_t count() const noexcept;

    // Bit i of `code` becomes element i.
    static BitVector from_index(std::uint64_t code, std::size_t n);
    std::uint64_t to_index() const;

    Eigen::VectorXd as_real() const;

    bool operator==(const BitVector&) const = default;

private:
    std::vector<std::uint8_t> bits_;
};

// Vector of {-1,+1} spins.
class SpinVector {
public:
    SpinVector() = default;
    // Throws std::invalid_argument if any element is not -1 or +1.
    explicit SpinVector(std::vector<std::int8_t> spins);

    std::size_t size() const noexcept { return spins_.size(); }
    std::int8_t operator[](std::size_t i) const noexcept { return spins_[i]; }
    std::span<const std::int8_t> spins() const noexcept { return spins_; }

    bool operator==(const SpinVector&) const = default;

private:
    std::vector<std::int8_t> spins_;
};

// Weights (visible x hidden) and the two bias vectors of a binary RBM.
struct RbmParams {
    Eigen::MatrixXd weights;
    Eigen::VectorXd visible_bias;
    Eigen::VectorXd hidden_bias;

    static RbmParams zeros(std::size_t visible, std::size_t hidden);
    // W ~ N(0, sd^2), zero biases.
    static RbmParams random(std::size_t visible, std::size_t hidden, double sd, Rng& rng);

    std::size_t visible_size() const noexcept { return static_cast<std::size_t>(visible_bias.size()); }
    std::size_t hidden_size() const noexcept { return static_cast<std::size_t>(hidden_bias.size()); }

    // Throws DimensionError on inconsistent shapes, std::invalid_argument on
    // empty or non-finite parameters.
    void validate() const;

    RbmParams transposed() const;

    bool operator==(const RbmParams& other) const;
};

// Ascent direction of the log-likelihood; same shapes as RbmParams.
struct GradientEstimate {
    Eigen::MatrixXd weights;
    Eigen::VectorXd visible_bias;
    Eigen::VectorXd hidden_bias;

    static GradientEstimate zeros(std::size_t visible, std::size_t hidden);
    double max_abs() const;
};

inline constexpr std::size_t kDefaultEnumerationLimit = 24;

double sigmoid(double x) noexcept;
// log(1 + e^x) without overflow.
double softplus(double x) noexcept;
double log_sum_exp(std::span<const double> values) noexcept;

double energy(const RbmParams& params, const BitVector& v, const BitVector& h);

// Pre-sigmoid inputs b_h + W^T v and b_v + W h. Both conditionals and the
// hardware sampler route through these so that summation order is shared.
Eigen::VectorXd hidden_activation(const Eigen::MatrixXd& weights, const Eigen::VectorXd& hidden_bias,
                                  const BitVector& v);
Eigen::VectorXd visible_activation(const Eigen::MatrixXd& weights, const Eigen::VectorXd& visible_bias,
                                   const BitVector& h);

// P(h_j = 1 | v) for every hidden unit.
Eigen::VectorXd hidden_conditional(const RbmParams& params, const BitVector& v);
// P(v_i = 1 | h) for every visible unit.
Eigen::VectorXd visible_conditional(const RbmParams& params, const BitVector& h);

// Element i is 1 iff a fresh uniform draw is below probs[i].
BitVector sample_bernoulli(const Eigen::VectorXd& probs, Rng& rng);

SpinVector spins_from_bits(const BitVector& bits);
BitVector bits_from_spins(const SpinVector& spins);

// Bipartite Ising form of an RBM under sigma = 2b - 1:
//   H(s, t) = -sum_ij J_ij s_i t_j - mu (sum_i f_i s_i + sum_j g_j t_j)
// with E(v, h) = H(s, t) + offset exactly.
struct IsingForm {
    Eigen::MatrixXd coupling;
    Eigen::VectorXd visible_field;
    Eigen::VectorXd hidden_field;
    double field_strength = 1.0;
    double offset = 0.0;
};

IsingForm ising_from_rbm(const RbmParams& params);
double ising_hamiltonian(const IsingForm& ising, const SpinVector& visible, const SpinVector& hidden);

// log sum_h exp(-E(v, h)) = b_v.v + sum_j softplus(b_h_j + W_j.v)
double log_unnormalized_marginal(const RbmParams& params, const BitVector& v);

// log Z by enumerating visibles with the hidden sum done analytically.
double exact_partition(const RbmParams& params, std::size_t limit = kDefaultEnumerationLimit);
// log Z by enumerating all 2^(M+N) joint states. Test oracle only.
double brute_force_partition(const RbmParams& params, std::size_t limit = kDefaultEnumerationLimit);

// Sum over samples of log P(v).
double exact_log_likelihood(const RbmParams& params, std::span<const BitVector> data,
                            std::size_t limit = kDefaultEnumerationLimit);

// Per-sample-mean log-likelihood gradient with the model expectation by
// enumeration.
GradientEstimate exact_gradient(const RbmParams& params, std::span<const BitVector> data,
                                std::size_t limit = kDefaultEnumerationLimit);

// P(v) for every visible configuration, indexed by BitVector::to_index().
std::vector<double> model_visible_distribution(const RbmParams& params,
                                               std::size_t limit = kDefaultEnumerationLimit);

void check_enumerable(const RbmParams& params, std::size_t limit);

}  // namespace isingrbm
