#include "isingrbm/rbm.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <stdexcept>
#include <string>

#include "enumeration.hpp"

namespace isingrbm {

// ---------------------------------------------------------------- BitVector

BitVector::BitVector(std::size_t n, std::uint8_t fill) : bits_(n, fill ? 1 : 0) {}

BitVector::BitVector(std::vector<std::uint8_t> bits) : bits_(std::move(bits)) {
    for (std::size_t i = 0; i < bits_.size(); ++i)
        if (bits_[i] > 1) throw std::invalid_argument("bit " + std::to_string(i) + " is not 0 or 1");
}

BitVector::BitVector(std::initializer_list<int> bits) {
    bits_.reserve(bits.size());
    for (int b : bits) {
        if (b != 0 && b != 1) throw std::invalid_argument("bit value " + std::to_string(b) + " is not 0 or 1");
        bits_.push_back(static_cast<std::uint8_t>(b));
    }
}

std::size_t BitVector::count() const noexcept {
    return static_cast<std::size_t>(std::count(bits_.begin(), bits_.end(), std::uint8_t{1}));
}

BitVector BitVector::from_index(std::uint64_t code, std::size_t n) {
    BitVector out(n);
    for (std::size_t i = 0; i < n; ++i) out.bits_[i] = static_cast<std::uint8_t>((code >> i) & 1U);
    return out;
}

std::uint64_t BitVector::to_index() const {
    if (bits_.size() > 64) throw std::length_error("BitVector longer than 64 bits has no index");
    std::uint64_t code = 0;
    for (std::size_t i = 0; i < bits_.size(); ++i) code |= std::uint64_t{bits_[i]} << i;
    return code;
}

Eigen::VectorXd BitVector::as_real() const {
    Eigen::VectorXd out(static_cast<Eigen::Index>(bits_.size()));
    for (std::size_t i = 0; i < bits_.size(); ++i) out(static_cast<Eigen::Index>(i)) = bits_[i];
    return out;
}

SpinVector::SpinVector(std::vector<std::int8_t> spins) : spins_(std::move(spins)) {
    for (std::size_t i = 0; i < spins_.size(); ++i)
        if (spins_[i] != 1 && spins_[i] != -1)
            throw std::invalid_argument("spin " + std::to_string(i) + " is not -1 or +1");
}

// ---------------------------------------------------------------- RbmParams

RbmParams RbmParams::zeros(std::size_t visible, std::size_t hidden) {
    const auto m = static_cast<Eigen::Index>(visible);
    const auto n = static_cast<Eigen::Index>(hidden);
    return {Eigen::MatrixXd::Zero(m, n), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)};
}

RbmParams RbmParams::random(std::size_t visible, std::size_t hidden, double sd, Rng& rng) {
    RbmParams p = zeros(visible, hidden);
    // Row-major draw order keeps the stream independent of storage order.
    for (Eigen::Index i = 0; i < p.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < p.weights.cols(); ++j) p.weights(i, j) = rng.normal(0.0, sd);
    return p;
}

void RbmParams::validate() const {
    if (visible_bias.size() == 0) throw std::invalid_argument("RBM needs at least one visible unit");
    if (hidden_bias.size() == 0) throw std::invalid_argument("RBM needs at least one hidden unit");
    if (weights.rows() != visible_bias.size())
        throw DimensionError("weight rows (visible)", visible_size(), static_cast<std::size_t>(weights.rows()));
    if (weights.cols() != hidden_bias.size())
        throw DimensionError("weight columns (hidden)", hidden_size(), static_cast<std::size_t>(weights.cols()));
    if (!weights.allFinite() || !visible_bias.allFinite() || !hidden_bias.allFinite())
        throw std::invalid_argument("RBM parameters must be finite");
}

RbmParams RbmParams::transposed() const { return {weights.transpose(), hidden_bias, visible_bias}; }

bool RbmParams::operator==(const RbmParams& other) const {
    return weights.rows() == other.weights.rows() && weights.cols() == other.weights.cols() &&
           visible_bias.size() == other.visible_bias.size() && hidden_bias.size() == other.hidden_bias.size() &&
           weights == other.weights && visible_bias == other.visible_bias && hidden_bias == other.hidden_bias;
}

GradientEstimate GradientEstimate::zeros(std::size_t visible, std::size_t hidden) {
    const auto m = static_cast<Eigen::Index>(visible);
    const auto n = static_cast<Eigen::Index>(hidden);
    return {Eigen::MatrixXd::Zero(m, n), Eigen::VectorXd::Zero(m), Eigen::VectorXd::Zero(n)};
}

double GradientEstimate::max_abs() const {
    double m = 0.0;
    if (weights.size()) m = std::max(m, weights.cwiseAbs().maxCoeff());
    if (visible_bias.size()) m = std::max(m, visible_bias.cwiseAbs().maxCoeff());
    if (hidden_bias.size()) m = std::max(m, hidden_bias.cwiseAbs().maxCoeff());
    return m;
}

// ---------------------------------------------------------------- scalar helpers

double sigmoid(double x) noexcept { return 1.0 / (1.0 + std::exp(-x)); }

double softplus(double x) noexcept { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double log_sum_exp(std::span<const double> values) noexcept {
    if (values.empty()) return -std::numeric_limits<double>::infinity();
    const double hi = *std::max_element(values.begin(), values.end());
    if (!std::isfinite(hi)) return hi;
    double acc = 0.0;
    for (double v : values) acc += std::exp(v - hi);
    return hi + std::log(acc);
}

namespace {

void check_length(const char* what, std::size_t expected, std::size_t actual) {
    if (expected != actual) throw DimensionError(what, expected, actual);
}

}  // namespace

// ---------------------------------------------------------------- energy & conditionals

double energy(const RbmParams& params, const BitVector& v, const BitVector& h) {
    check_length("visible state", params.visible_size(), v.size());
    check_length("hidden state", params.hidden_size(), h.size());
    double e = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i) {
        if (!v[i]) continue;
        const auto ii = static_cast<Eigen::Index>(i);
        e -= params.visible_bias(ii);
        for (std::size_t j = 0; j < h.size(); ++j)
            if (h[j]) e -= params.weights(ii, static_cast<Eigen::Index>(j));
    }
    for (std::size_t j = 0; j < h.size(); ++j)
        if (h[j]) e -= params.hidden_bias(static_cast<Eigen::Index>(j));
    return e;
}

Eigen::VectorXd hidden_activation(const Eigen::MatrixXd& weights, const Eigen::VectorXd& hidden_bias,
                                  const BitVector& v) {
    check_length("visible state", static_cast<std::size_t>(weights.rows()), v.size());
    Eigen::VectorXd a = hidden_bias;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) a += weights.row(static_cast<Eigen::Index>(i)).transpose();
    return a;
}

Eigen::VectorXd visible_activation(const Eigen::MatrixXd& weights, const Eigen::VectorXd& visible_bias,
                                   const BitVector& h) {
    check_length("hidden state", static_cast<std::size_t>(weights.cols()), h.size());
    Eigen::VectorXd a = visible_bias;
    for (std::size_t j = 0; j < h.size(); ++j)
        if (h[j]) a += weights.col(static_cast<Eigen::Index>(j));
    return a;
}

Eigen::VectorXd hidden_conditional(const RbmParams& params, const BitVector& v) {
    Eigen::VectorXd a = hidden_activation(params.weights, params.hidden_bias, v);
    for (auto& x : a) x = sigmoid(x);
    return a;
}

Eigen::VectorXd visible_conditional(const RbmParams& params, const BitVector& h) {
    Eigen::VectorXd a = visible_activation(params.weights, params.visible_bias, h);
    for (auto& x : a) x = sigmoid(x);
    return a;
}

BitVector sample_bernoulli(const Eigen::VectorXd& probs, Rng& rng) {
    BitVector out(static_cast<std::size_t>(probs.size()));
    for (Eigen::Index i = 0; i < probs.size(); ++i) {
        const double p = probs(i);
        if (!(p >= 0.0 && p <= 1.0))
            throw std::invalid_argument("probability " + std::to_string(p) + " at index " + std::to_string(i) +
                                        " is outside [0, 1]");
    }
    for (Eigen::Index i = 0; i < probs.size(); ++i) out.set(static_cast<std::size_t>(i), rng.uniform() < probs(i));
    return out;
}

// ---------------------------------------------------------------- spin form

SpinVector spins_from_bits(const BitVector& bits) {
    std::vector<std::int8_t> s(bits.size());
    for (std::size_t i = 0; i < bits.size(); ++i) s[i] = static_cast<std::int8_t>(2 * bits[i] - 1);
    return SpinVector(std::move(s));
}

BitVector bits_from_spins(const SpinVector& spins) {
    std::vector<std::uint8_t> b(spins.size());
    for (std::size_t i = 0; i < spins.size(); ++i) b[i] = static_cast<std::uint8_t>((spins[i] + 1) / 2);
    return BitVector(std::move(b));
}

IsingForm ising_from_rbm(const RbmParams& params) {
    params.validate();
    IsingForm out;
    out.coupling = params.weights / 4.0;
    out.visible_field = params.weights.rowwise().sum() / 4.0 + params.visible_bias / 2.0;
    out.hidden_field = params.weights.colwise().sum().transpose() / 4.0 + params.hidden_bias / 2.0;
    out.field_strength = 1.0;
    out.offset = -(params.weights.sum() / 4.0 + params.visible_bias.sum() / 2.0 + params.hidden_bias.sum() / 2.0);
    return out;
}

double ising_hamiltonian(const IsingForm& ising, const SpinVector& visible, const SpinVector& hidden) {
    check_length("visible spins", static_cast<std::size_t>(ising.coupling.rows()), visible.size());
    check_length("hidden spins", static_cast<std::size_t>(ising.coupling.cols()), hidden.size());
    double pair = 0.0;
    double field = 0.0;
    for (std::size_t i = 0; i < visible.size(); ++i) {
        const auto ii = static_cast<Eigen::Index>(i);
        field += ising.visible_field(ii) * visible[i];
        for (std::size_t j = 0; j < hidden.size(); ++j)
            pair += ising.coupling(ii, static_cast<Eigen::Index>(j)) * visible[i] * hidden[j];
    }
    for (std::size_t j = 0; j < hidden.size(); ++j) field += ising.hidden_field(static_cast<Eigen::Index>(j)) * hidden[j];
    return -pair - ising.field_strength * field;
}

// ---------------------------------------------------------------- enumeration

void check_enumerable(const RbmParams& params, std::size_t limit) {
    const std::size_t units = params.visible_size() + params.hidden_size();
    if (units > limit || params.visible_size() >= 63) throw EnumerationGuardError(units, limit);
}

double log_unnormalized_marginal(const RbmParams& params, const BitVector& v) {
    const Eigen::VectorXd a = hidden_activation(params.weights, params.hidden_bias, v);
    double acc = 0.0;
    for (std::size_t i = 0; i < v.size(); ++i)
        if (v[i]) acc += params.visible_bias(static_cast<Eigen::Index>(i));
    for (double x : a) acc += softplus(x);
    return acc;
}

namespace {

// log-marginal of every row of `block` (rows are visible configurations).
Eigen::ArrayXd block_log_marginals(const RbmParams& params, const Eigen::MatrixXd& block,
                                   Eigen::ArrayXXd* hidden_probs = nullptr) {
    Eigen::ArrayXXd act = ((block * params.weights).rowwise() + params.hidden_bias.transpose()).array();
    Eigen::ArrayXd out = (block * params.visible_bias).array() + detail::softplus_array(act).rowwise().sum();
    if (hidden_probs) *hidden_probs = 1.0 / (1.0 + (-act).exp());
    return out;
}

// log Z of `params`, enumerating its visible layer.
double partition_over_visibles(const RbmParams& params) {
    // Streaming log-sum-exp over blocks.
    double running_max = -std::numeric_limits<double>::infinity();
    double running_sum = 0.0;
    detail::for_each_visible_block(params.visible_size(), [&](const Eigen::MatrixXd& block, std::uint64_t) {
        const Eigen::ArrayXd lm = block_log_marginals(params, block);
        const double hi = lm.maxCoeff();
        if (hi > running_max) {
            running_sum *= std::exp(running_max - hi);
            running_max = hi;
        }
        running_sum += (lm - running_max).exp().sum();
    });
    return running_max + std::log(running_sum);
}

}  // namespace

double exact_partition(const RbmParams& params, std::size_t limit) {
    params.validate();
    check_enumerable(params, limit);
    // The joint is symmetric in the two layers; enumerate the smaller one.
    return params.hidden_size() < params.visible_size() ? partition_over_visibles(params.transposed())
                                                        : partition_over_visibles(params);
}

double brute_force_partition(const RbmParams& params, std::size_t limit) {
    params.validate();
    check_enumerable(params, limit);
    const std::size_t m = params.visible_size();
    const std::size_t n = params.hidden_size();
    std::vector<double> terms;
    terms.reserve(std::size_t{1} << (m + n));
    for (std::uint64_t vc = 0; vc < (std::uint64_t{1} << m); ++vc) {
        const BitVector v = BitVector::from_index(vc, m);
        for (std::uint64_t hc = 0; hc < (std::uint64_t{1} << n); ++hc)
            terms.push_back(-energy(params, v, BitVector::from_index(hc, n)));
    }
    return log_sum_exp(terms);
}

double exact_log_likelihood(const RbmParams& params, std::span<const BitVector> data, std::size_t limit) {
    if (data.empty()) throw std::invalid_argument("log-likelihood of an empty dataset");
    const double log_z = exact_partition(params, limit);
    double total = 0.0;
    for (const auto& v : data) total += log_unnormalized_marginal(params, v) - log_z;
    return total;
}

std::vector<double> model_visible_distribution(const RbmParams& params, std::size_t limit) {
    const double log_z = exact_partition(params, limit);
    std::vector<double> out(std::size_t{1} << params.visible_size());
    detail::for_each_visible_block(params.visible_size(), [&](const Eigen::MatrixXd& block, std::uint64_t first) {
        const Eigen::ArrayXd lm = block_log_marginals(params, block);
        for (Eigen::Index r = 0; r < lm.size(); ++r)
            out[static_cast<std::size_t>(first) + static_cast<std::size_t>(r)] = std::exp(lm(r) - log_z);
    });
    return out;
}

GradientEstimate exact_gradient(const RbmParams& params, std::span<const BitVector> data, std::size_t limit) {
    if (data.empty()) throw std::invalid_argument("gradient of an empty dataset");
    params.validate();
    check_enumerable(params, limit);
    const std::size_t m = params.visible_size();
    const std::size_t n = params.hidden_size();
    GradientEstimate g = GradientEstimate::zeros(m, n);

    // Positive phase: clamped visibles, analytic hidden expectation.
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), static_cast<Eigen::Index>(m));
    for (std::size_t t = 0; t < data.size(); ++t) {
        if (data[t].size() != m) throw DimensionError("visible vector", m, data[t].size());
        x.row(static_cast<Eigen::Index>(t)) = data[t].as_real().transpose();
    }
    const Eigen::MatrixXd ph =
        (1.0 / (1.0 + (-((x * params.weights).rowwise() + params.hidden_bias.transpose()).array()).exp())).matrix();
    const double inv_t = 1.0 / static_cast<double>(data.size());
    g.weights.noalias() = inv_t * (x.transpose() * ph);
    g.visible_bias = inv_t * x.colwise().sum().transpose();
    g.hidden_bias = inv_t * ph.colwise().sum().transpose();

    // Negative phase: exact model expectation over the smaller layer.
    const bool flip = n < m;
    const RbmParams q = flip ? params.transposed() : params;
    Eigen::MatrixXd vh = Eigen::MatrixXd::Zero(q.weights.rows(), q.weights.cols());
    Eigen::VectorXd ev = Eigen::VectorXd::Zero(q.visible_bias.size());
    Eigen::VectorXd eh = Eigen::VectorXd::Zero(q.hidden_bias.size());
    auto accumulate = [&](const Eigen::MatrixXd& block, const Eigen::ArrayXXd& block_ph, const Eigen::ArrayXd& lm,
                          double log_z) {
        const Eigen::VectorXd pv = (lm - log_z).exp().matrix();
        const Eigen::MatrixXd weighted_h = (block_ph.colwise() * pv.array()).matrix();
        vh.noalias() += block.transpose() * weighted_h;
        ev.noalias() += block.transpose() * pv;
        eh += weighted_h.colwise().sum().transpose();
    };
    if (q.visible_size() <= detail::kEnumerationBlockBits) {
        // One block: the partition function comes from the same pass.
        detail::for_each_visible_block(q.visible_size(), [&](const Eigen::MatrixXd& block, std::uint64_t) {
            Eigen::ArrayXXd block_ph;
            const Eigen::ArrayXd lm = block_log_marginals(q, block, &block_ph);
            const double hi = lm.maxCoeff();
            accumulate(block, block_ph, lm, hi + std::log((lm - hi).exp().sum()));
        });
    } else {
        const double log_z = partition_over_visibles(q);
        detail::for_each_visible_block(q.visible_size(), [&](const Eigen::MatrixXd& block, std::uint64_t) {
            Eigen::ArrayXXd block_ph;
            const Eigen::ArrayXd lm = block_log_marginals(q, block, &block_ph);
            accumulate(block, block_ph, lm, log_z);
        });
    }
    if (flip) {
        g.weights -= vh.transpose();
        g.visible_bias -= eh;
        g.hidden_bias -= ev;
    } else {
        g.weights -= vh;
        g.visible_bias -= ev;
        g.hidden_bias -= eh;
    }
    return g;
}

}  // namespace isingrbm
