#include "isingrbm/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "enumeration.hpp"
#include "parallel.hpp"

namespace isingrbm {

namespace {

// Stream keys; every job derives its own stream from the master seed.
constexpr std::uint64_t kDataStream = 1;
constexpr std::uint64_t kInitStream = 2;
constexpr std::uint64_t kTrainStream = 3;
constexpr std::uint64_t kSubstrateSeedStream = 4;
constexpr std::uint64_t kAisStream = 5;

Eigen::MatrixXd bernoulli_matrix(const Eigen::ArrayXXd& probs, Rng& rng) {
    Eigen::MatrixXd out(probs.rows(), probs.cols());
    for (Eigen::Index r = 0; r < probs.rows(); ++r)
        for (Eigen::Index c = 0; c < probs.cols(); ++c) out(r, c) = rng.uniform() < probs(r, c) ? 1.0 : 0.0;
    return out;
}

Eigen::ArrayXXd logistic(const Eigen::ArrayXXd& x) { return 1.0 / (1.0 + (-x).exp()); }

}  // namespace

// ---------------------------------------------------------------- AIS

void AisConfig::validate(std::size_t visible) const {
    if (n_temps < 2) throw std::invalid_argument("AIS needs n_temps >= 2");
    if (n_runs < 1) throw std::invalid_argument("AIS needs n_runs >= 1");
    if (base == AisBase::FittedVisibleBias) {
        if (static_cast<std::size_t>(base_visible_bias.size()) != visible)
            throw DimensionError("AIS base visible bias", visible, static_cast<std::size_t>(base_visible_bias.size()));
        if (!base_visible_bias.allFinite()) throw std::invalid_argument("AIS base visible bias must be finite");
    }
}

Eigen::VectorXd fit_base_visible_bias(std::span<const BitVector> data, double pseudo_count) {
    if (data.empty()) throw std::invalid_argument("cannot fit base rates to an empty dataset");
    const std::size_t m = data.front().size();
    Eigen::VectorXd on = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));
    for (const auto& v : data) {
        if (v.size() != m) throw DimensionError("base-rate sample", m, v.size());
        for (std::size_t i = 0; i < m; ++i) on(static_cast<Eigen::Index>(i)) += v[i];
    }
    const double total = static_cast<double>(data.size()) + 2.0 * pseudo_count;
    Eigen::VectorXd bias(static_cast<Eigen::Index>(m));
    for (Eigen::Index i = 0; i < bias.size(); ++i) {
        const double p = (on(i) + pseudo_count) / total;
        bias(i) = std::log(p) - std::log1p(-p);
    }
    return bias;
}

AisResult ais_log_partition(const RbmParams& params, const AisConfig& cfg, Rng& rng) {
    params.validate();
    const std::size_t m = params.visible_size();
    const std::size_t n = params.hidden_size();
    cfg.validate(m);
    const auto runs = static_cast<Eigen::Index>(cfg.n_runs);
    const Eigen::VectorXd base =
        cfg.base == AisBase::FittedVisibleBias ? cfg.base_visible_bias : Eigen::VectorXd::Zero(static_cast<Eigen::Index>(m));

    double log_z_base = static_cast<double>(n) * std::log(2.0);
    for (double b : base) log_z_base += softplus(b);

    // log p*_beta(v) for every row of `v`.
    auto log_pstar = [&](double beta, const Eigen::MatrixXd& v) -> Eigen::ArrayXd {
        Eigen::ArrayXXd act = ((v * params.weights).rowwise() + params.hidden_bias.transpose()).array() * beta;
        return (1.0 - beta) * (v * base).array() + beta * (v * params.visible_bias).array() +
               detail::softplus_array(act).rowwise().sum();
    };

    const Eigen::ArrayXXd base_probs =
        logistic(base.transpose().replicate(runs, 1).array());
    Eigen::MatrixXd v = bernoulli_matrix(base_probs, rng);

    const std::size_t steps = cfg.n_temps - 1;
    Eigen::ArrayXd log_w = Eigen::ArrayXd::Zero(runs);
    Eigen::ArrayXd prev = log_pstar(0.0, v);
    for (std::size_t k = 1; k <= steps; ++k) {
        const double beta = static_cast<double>(k) / static_cast<double>(steps);
        log_w += log_pstar(beta, v) - prev;
        if (k == steps) break;
        const Eigen::ArrayXXd ph =
            logistic(((v * params.weights).rowwise() + params.hidden_bias.transpose()).array() * beta);
        const Eigen::MatrixXd h = bernoulli_matrix(ph, rng);
        const Eigen::ArrayXXd pv = logistic(
            ((h * params.weights.transpose() * beta).rowwise() +
             ((1.0 - beta) * base + beta * params.visible_bias).transpose())
                .array());
        v = bernoulli_matrix(pv, rng);
        prev = log_pstar(beta, v);
    }

    std::vector<double> finite;
    finite.reserve(cfg.n_runs);
    for (Eigen::Index r = 0; r < runs; ++r)
        if (std::isfinite(log_w(r))) finite.push_back(log_w(r));
    AisResult out;
    out.used = finite.size();
    out.dropped = cfg.n_runs - finite.size();
    if (finite.empty()) throw std::runtime_error("AIS failed: every run produced a non-finite importance weight");

    const double hi = *std::max_element(finite.begin(), finite.end());
    double mean = 0.0;
    for (double x : finite) mean += std::exp(x - hi);
    mean /= static_cast<double>(finite.size());
    double var = 0.0;
    for (double x : finite) var += (std::exp(x - hi) - mean) * (std::exp(x - hi) - mean);
    var = finite.size() > 1 ? var / static_cast<double>(finite.size() - 1) : 0.0;

    out.log_z = log_z_base + hi + std::log(mean);
    out.std_error = std::sqrt(var / static_cast<double>(finite.size())) / mean;
    return out;
}

// ---------------------------------------------------------------- likelihood & KL

double avg_log_prob(const RbmParams& params, std::span<const BitVector> data, double log_z) {
    if (data.empty()) throw std::invalid_argument("average log probability of an empty dataset");
    double total = 0.0;
    for (const auto& v : data) total += log_unnormalized_marginal(params, v) - log_z;
    return total / static_cast<double>(data.size());
}

double kl_divergence(std::span<const double> p_true, std::span<const double> q_model) {
    if (p_true.size() != q_model.size()) throw DimensionError("probability table", p_true.size(), q_model.size());
    double mass = 0.0;
    for (double p : p_true) {
        if (!(p >= 0.0)) throw std::invalid_argument("reference table has a negative or NaN entry");
        mass += p;
    }
    if (std::abs(mass - 1.0) > 1e-9) throw std::invalid_argument("reference table does not sum to 1");
    double kl = 0.0;
    for (std::size_t s = 0; s < p_true.size(); ++s) {
        const double p = p_true[s];
        const double q = q_model[s];
        if (!(q >= 0.0)) throw std::invalid_argument("model table has a negative or NaN entry");
        if (p == 0.0) continue;
        if (q == 0.0) return std::numeric_limits<double>::infinity();
        kl += p * (std::log(p) - std::log(q));
    }
    return kl;
}

std::vector<double> moving_average(std::span<const double> values, std::size_t window) {
    if (window < 1) throw std::invalid_argument("moving average window must be >= 1");
    std::vector<double> out(values.size());
    double acc = 0.0;
    for (std::size_t t = 0; t < values.size(); ++t) {
        acc += values[t];
        if (t >= window) acc -= values[t - window];
        out[t] = acc / static_cast<double>(std::min(t + 1, window));
    }
    return out;
}

EvalReport evaluate_trace(const TrainTrace& trace, std::span<const BitVector> data, std::span<const double> table,
                          const AisConfig& ais, Rng& rng, std::size_t window) {
    if (trace.snapshots.empty()) throw std::invalid_argument("trace has no snapshots");
    EvalReport report;
    std::vector<double> values;
    for (const auto& snap : trace.snapshots) {
        const RbmParams& p = snap.params;
        double log_z = 0.0;
        double se = 0.0;
        if (p.visible_size() + p.hidden_size() <= kDefaultEnumerationLimit) {
            log_z = exact_partition(p);
        } else {
            const AisResult r = ais_log_partition(p, ais, rng);
            log_z = r.log_z;
            se = r.std_error;
        }
        const double lp = avg_log_prob(p, data, log_z);
        report.trajectory.emplace_back(snap.iteration, lp);
        values.push_back(lp);
        report.avg_log_prob = lp;
        report.log_z = log_z;
        report.log_z_stderr = se;
    }
    report.smoothed = moving_average(values, window);
    if (!table.empty()) report.kl = kl_divergence(table, model_visible_distribution(trace.final));
    return report;
}

// ---------------------------------------------------------------- bias experiment

std::string to_string(BiasAlgorithm algo) {
    switch (algo) {
        case BiasAlgorithm::ML: return "ml";
        case BiasAlgorithm::CD1: return "cd1";
        case BiasAlgorithm::CDk: return "cdk";
        case BiasAlgorithm::BGF: return "bgf";
    }
    return "unknown";
}

BiasAlgorithm parse_bias_algorithm(const std::string& name) {
    if (name == "ml") return BiasAlgorithm::ML;
    if (name == "cd1") return BiasAlgorithm::CD1;
    if (name == "cdk") return BiasAlgorithm::CDk;
    if (name == "bgf") return BiasAlgorithm::BGF;
    throw std::invalid_argument("unknown bias-benchmark algorithm '" + name + "' (expected ml, cd1, cdk or bgf)");
}

void BiasBenchConfig::validate() const {
    if (visible + hidden > kDefaultEnumerationLimit)
        throw EnumerationGuardError(visible + hidden, kDefaultEnumerationLimit);
    if (visible < 1 || hidden < 1) throw std::invalid_argument("bias benchmark needs visible and hidden units");
    if (samples_per_dist < 1) throw std::invalid_argument("samples_per_dist must be >= 1");
    if (algorithms.empty()) throw std::invalid_argument("bias benchmark needs at least one algorithm");
    if (cdk_k < 1) throw std::invalid_argument("cdk_k must be >= 1");
    hw.validate();
}

double BiasBenchConfig::effective_bgf_alpha() const noexcept {
    return bgf_alpha > 0.0 ? bgf_alpha : cd_alpha / static_cast<double>(samples_per_dist);
}

const std::vector<double>& BiasBenchResult::kl_of(BiasAlgorithm algo) const {
    for (const auto& [a, values] : sorted_kl)
        if (a == algo) return values;
    throw std::out_of_range("algorithm " + to_string(algo) + " was not run");
}

double median(std::vector<double> values) {
    if (values.empty()) throw std::invalid_argument("median of an empty set");
    std::sort(values.begin(), values.end());
    const std::size_t n = values.size();
    return n % 2 ? values[n / 2] : 0.5 * (values[n / 2 - 1] + values[n / 2]);
}

double BiasBenchResult::median(BiasAlgorithm algo) const { return isingrbm::median(kl_of(algo)); }

std::vector<std::pair<double, double>> BiasBenchResult::cdf(BiasAlgorithm algo) const {
    const auto& values = kl_of(algo);
    std::vector<std::pair<double, double>> out;
    out.reserve(values.size());
    for (std::size_t s = 0; s < values.size(); ++s)
        out.emplace_back(values[s], static_cast<double>(s + 1) / static_cast<double>(values.size()));
    return out;
}

BiasBenchResult bias_experiment(const BiasBenchConfig& cfg, std::uint64_t seed) {
    cfg.validate();
    Rng data_rng = Rng::derive(seed, {kDataStream});
    const auto sets = gen_synthetic(cfg.n_distributions, cfg.samples_per_dist, cfg.visible, data_rng);

    const std::size_t n_algos = cfg.algorithms.size();
    const std::size_t jobs = cfg.n_distributions * cfg.runs;
    std::vector<KlRecord> records(jobs * n_algos);

    detail::parallel_for(jobs, cfg.workers, [&](std::size_t job) {
        const std::size_t d = job / cfg.runs;
        const std::size_t r = job % cfg.runs;
        const auto& data = sets[d].data.samples;
        Rng init_rng = Rng::derive(seed, {kInitStream, d, r});
        const RbmParams init = initial_params(cfg.visible, cfg.hidden, init_rng, cfg.init_sd);
        for (std::size_t a = 0; a < n_algos; ++a) {
            const BiasAlgorithm algo = cfg.algorithms[a];
            Rng rng = Rng::derive(seed, {kTrainStream, d, r, static_cast<std::uint64_t>(algo)});
            TrainConfig tc;
            tc.iterations = cfg.iterations;
            HwConfig hw = cfg.hw;
            switch (algo) {
                case BiasAlgorithm::ML:
                    tc.algo = Algorithm::ML;
                    tc.alpha = cfg.ml_alpha;
                    break;
                case BiasAlgorithm::CD1:
                case BiasAlgorithm::CDk:
                    tc.algo = Algorithm::CD;
                    tc.alpha = cfg.cd_alpha;
                    tc.k = algo == BiasAlgorithm::CD1 ? 1 : cfg.cdk_k;
                    tc.batch_size = cfg.samples_per_dist;
                    break;
                case BiasAlgorithm::BGF:
                    tc.algo = Algorithm::BGF;
                    tc.alpha = cfg.effective_bgf_alpha();
                    tc.batch_size = 1;
                    tc.particles = cfg.bgf_particles;
                    tc.anneal_passes = cfg.bgf_anneal_passes;
                    hw.seed = Rng::derive(seed, {kSubstrateSeedStream, d, r}).next();
                    break;
            }
            const TrainTrace trace = train(init, data, tc, hw, rng);
            records[job * n_algos + a] = {d, r, algo,
                                          kl_divergence(sets[d].table, model_visible_distribution(trace.final))};
        }
    });

    BiasBenchResult out;
    out.records = std::move(records);
    for (BiasAlgorithm algo : cfg.algorithms) {
        std::vector<double> values;
        values.reserve(jobs);
        for (const auto& rec : out.records)
            if (rec.algo == algo) values.push_back(rec.kl);
        std::sort(values.begin(), values.end());
        out.sorted_kl.emplace_back(algo, std::move(values));
    }
    return out;
}

// ---------------------------------------------------------------- classifier head

namespace {

std::size_t class_count(std::span<const int> labels) {
    if (labels.empty()) throw std::invalid_argument("classifier needs labeled samples");
    int hi = 0;
    for (int y : labels) {
        if (y < 0) throw std::invalid_argument("class labels must be non-negative");
        hi = std::max(hi, y);
    }
    std::vector<bool> seen(static_cast<std::size_t>(hi) + 1, false);
    for (int y : labels) seen[static_cast<std::size_t>(y)] = true;
    if (std::count(seen.begin(), seen.end(), true) < 2)
        throw std::invalid_argument("classifier needs at least two distinct classes");
    return static_cast<std::size_t>(hi) + 1;
}

Eigen::MatrixXd softmax_rows(const Eigen::MatrixXd& logits) {
    Eigen::MatrixXd p = logits.colwise() - logits.rowwise().maxCoeff();
    p = p.array().exp();
    p.array().colwise() /= p.rowwise().sum().array();
    return p;
}

}  // namespace

std::vector<int> LogisticHead::predict(const Eigen::MatrixXd& features) const {
    if (features.cols() != weights.rows())
        throw DimensionError("feature columns", static_cast<std::size_t>(weights.rows()),
                             static_cast<std::size_t>(features.cols()));
    const Eigen::MatrixXd logits = (features * weights).rowwise() + bias.transpose();
    std::vector<int> out(static_cast<std::size_t>(features.rows()));
    for (Eigen::Index r = 0; r < logits.rows(); ++r) {
        Eigen::Index best = 0;
        logits.row(r).maxCoeff(&best);
        out[static_cast<std::size_t>(r)] = static_cast<int>(best);
    }
    return out;
}

LogisticHead classifier_head_train(const Eigen::MatrixXd& features, std::span<const int> labels, double reg,
                                   const HeadOptions& options) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw DimensionError("label count", static_cast<std::size_t>(features.rows()), labels.size());
    if (!(reg >= 0.0)) throw std::invalid_argument("L2 strength must be >= 0");
    const std::size_t classes = class_count(labels);
    const Eigen::Index n = features.rows();
    const Eigen::Index c = static_cast<Eigen::Index>(classes);

    Eigen::MatrixXd onehot = Eigen::MatrixXd::Zero(n, c);
    for (Eigen::Index r = 0; r < n; ++r) onehot(r, labels[static_cast<std::size_t>(r)]) = 1.0;

    LogisticHead head;
    head.weights = Eigen::MatrixXd::Zero(features.cols(), c);
    head.bias = Eigen::VectorXd::Zero(c);
    const double inv_n = 1.0 / static_cast<double>(n);

    auto loss_of = [&](const Eigen::MatrixXd& probs) {
        double ce = 0.0;
        for (Eigen::Index r = 0; r < n; ++r)
            ce -= std::log(std::max(probs(r, labels[static_cast<std::size_t>(r)]), 1e-300));
        return ce * inv_n + 0.5 * reg * head.weights.squaredNorm();
    };

    for (std::size_t epoch = 0; epoch < options.epochs; ++epoch) {
        const Eigen::MatrixXd probs = softmax_rows((features * head.weights).rowwise() + head.bias.transpose());
        head.loss_history.push_back(loss_of(probs));
        const Eigen::MatrixXd err = (probs - onehot) * inv_n;
        const Eigen::MatrixXd grad_w = features.transpose() * err + reg * head.weights;
        const Eigen::VectorXd grad_b = err.colwise().sum().transpose();
        head.weights -= options.learning_rate * grad_w;
        head.bias -= options.learning_rate * grad_b;
    }
    return head;
}

double classifier_accuracy(const LogisticHead& head, const Eigen::MatrixXd& features, std::span<const int> labels) {
    if (static_cast<std::size_t>(features.rows()) != labels.size())
        throw DimensionError("label count", static_cast<std::size_t>(features.rows()), labels.size());
    if (labels.empty()) throw std::invalid_argument("accuracy of an empty set");
    const auto pred = head.predict(features);
    std::size_t correct = 0;
    for (std::size_t r = 0; r < labels.size(); ++r) correct += pred[r] == labels[r];
    return static_cast<double>(correct) / static_cast<double>(labels.size());
}

Eigen::MatrixXd hidden_features(const RbmParams& params, std::span<const BitVector> data) {
    params.validate();
    const auto m = static_cast<Eigen::Index>(params.visible_size());
    Eigen::MatrixXd x(static_cast<Eigen::Index>(data.size()), m);
    for (std::size_t r = 0; r < data.size(); ++r) {
        if (data[r].size() != params.visible_size())
            throw DimensionError("feature sample " + std::to_string(r), params.visible_size(), data[r].size());
        for (Eigen::Index i = 0; i < m; ++i) x(static_cast<Eigen::Index>(r), i) = data[r][static_cast<std::size_t>(i)];
    }
    const Eigen::ArrayXXd act = ((x * params.weights).rowwise() + params.hidden_bias.transpose()).array();
    return logistic(act).matrix();
}

// ---------------------------------------------------------------- noise sweep

std::vector<NoisePoint> noise_grid_25() {
    const double levels[] = {0.03, 0.10, 0.17, 0.24, 0.30};
    std::vector<NoisePoint> grid;
    for (double var : levels)
        for (double noise : levels) grid.push_back({var, noise});
    return grid;
}

Rng run_stream(std::uint64_t seed, std::size_t repetition) { return Rng::derive(seed, {kTrainStream, repetition}); }

Rng init_stream(std::uint64_t seed, std::size_t repetition) { return Rng::derive(seed, {kInitStream, repetition}); }

std::uint64_t substrate_seed(std::uint64_t seed, std::size_t repetition) {
    return Rng::derive(seed, {kSubstrateSeedStream, repetition}).next();
}

std::vector<SweepResult> noise_sweep(std::span<const NoisePoint> grid, const SweepSpec& spec,
                                     std::span<const BitVector> data, std::span<const double> table,
                                     std::uint64_t seed) {
    if (grid.empty()) throw std::invalid_argument("noise sweep grid is empty");
    if (data.empty()) throw std::invalid_argument("noise sweep needs training data");
    if (spec.seeds < 1) throw std::invalid_argument("noise sweep needs at least one seed");
    const std::size_t visible = data.front().size();
    std::vector<SweepResult> results(grid.size() * spec.seeds);

    detail::parallel_for(results.size(), spec.workers, [&](std::size_t job) {
        const std::size_t g = job / spec.seeds;
        const std::size_t r = job % spec.seeds;
        HwConfig hw = spec.hw;
        hw.variation_rms = grid[g].variation_rms;
        hw.noise_rms = grid[g].noise_rms;
        hw.seed = substrate_seed(seed, r);
        Rng init_rng = init_stream(seed, r);
        const RbmParams init = initial_params(visible, spec.hidden, init_rng, spec.init_sd);
        Rng rng = run_stream(seed, r);
        const TrainTrace trace = train(init, data, spec.train, hw, rng);
        Rng ais_rng = Rng::derive(seed, {kAisStream, r});
        results[job] = {grid[g], r, rng.seed(), evaluate_trace(trace, data, table, spec.ais, ais_rng, spec.window)};
    });
    return results;
}

}  // namespace isingrbm
