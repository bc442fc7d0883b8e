#include "cli.hpp"

#include <chrono>
#include <cstdlib>
#include <ctime>
#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>

#include <CLI11.hpp>

#include "isingrbm/config.hpp"
#include "isingrbm/data_io.hpp"
#include "isingrbm/errors.hpp"
#include "isingrbm/eval.hpp"
#include "isingrbm/trainers.hpp"

#ifndef ISINGRBM_VERSION
#define ISINGRBM_VERSION "dev"
#endif

namespace isingrbm::cli {
namespace {

namespace fs = std::filesystem;

// Stream keys under the run seed. Training uses run_stream(seed, 0).
constexpr std::uint64_t kDataStream = 101;
constexpr std::uint64_t kInitStream = 102;
constexpr std::uint64_t kAisStream = 103;

constexpr std::size_t kTableVisibleLimit = 20;

struct Options {
    std::string command;
    std::string config_path;
    std::string preset_name;
    std::vector<std::string> sets;
    std::string out_dir;
    std::uint64_t seed = 0;
    std::string algo;
    std::optional<std::size_t> batch_size;
    std::optional<std::size_t> workers;
    std::string model_path;
};

class Timer {
public:
    void mark(const std::string& stage) {
        const auto now = std::chrono::steady_clock::now();
        stages_.emplace_back(stage, std::chrono::duration<double>(now - last_).count());
        last_ = now;
    }
    double total() const {
        return std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
    }
    const std::vector<std::pair<std::string, double>>& stages() const { return stages_; }

private:
    std::chrono::steady_clock::time_point start_ = std::chrono::steady_clock::now();
    std::chrono::steady_clock::time_point last_ = start_;
    std::vector<std::pair<std::string, double>> stages_;
};

// Everything a subcommand produces; written to out_dir at the end.
struct Outputs {
    std::vector<ResultRow> rows;
    std::vector<std::pair<std::string, std::string>> extra_files;  // name, contents
    std::optional<RbmParams> model;
};

std::string shortest(double x) {
    std::ostringstream s;
    s.precision(6);
    s << x;
    return s.str();
}

ExperimentConfig resolve(const Options& o) {
    ExperimentConfig cfg = o.preset_name.empty() ? ExperimentConfig{} : preset(o.preset_name);
    if (!o.config_path.empty()) cfg = read_config(o.config_path, cfg);
    for (const auto& s : o.sets) {
        const auto eq = s.find('=');
        if (eq == std::string::npos) throw ConfigError("", "--set expects key=value, got '" + s + "'");
        apply_setting(cfg, s.substr(0, eq), s.substr(eq + 1));
    }
    if (!o.algo.empty()) apply_setting(cfg, o.command == "bias-bench" ? "bias.algorithms" : "train.algo", o.algo);
    if (o.batch_size) cfg.train.batch_size = *o.batch_size;
    if (o.workers) cfg.workers = *o.workers;
    return cfg;
}

template <typename Fn>
void as_config_error(const std::string& key, Fn&& fn) {
    try {
        fn();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::invalid_argument& e) {
        throw ConfigError(key, e.what());
    }
}

void check_config(const ExperimentConfig& cfg, const std::string& command) {
    const bool trains = command == "train" || command == "noise-sweep" || command == "classify";
    if (trains) {
        if (cfg.train.algo == Algorithm::BGF && cfg.train.batch_size != 1)
            throw ConfigError("train.batch_size", "BGF updates after every sample, batch size must be 1");
        as_config_error("train", [&] { cfg.train.validate(); });
        if (cfg.hidden == 0) throw ConfigError("model.hidden", "must be at least 1");
    }
    as_config_error("hw", [&] { cfg.hw.validate(); });
    if (cfg.ais.n_temps < 2) throw ConfigError("ais.n_temps", "must be at least 2");
    if (cfg.ais.n_runs < 1) throw ConfigError("ais.n_runs", "must be at least 1");
    if (cfg.workers == 0) throw ConfigError("run.workers", "must be at least 1");
    if (command == "bias-bench") as_config_error("bias", [&] { cfg.bias.validate(); });
    if (command == "noise-sweep" && cfg.sweep.seeds == 0) throw ConfigError("sweep.seeds", "must be at least 1");
    if (cfg.data.source == "idx" && cfg.data.train_images.empty() && command != "bias-bench" && command != "eval-ais")
        throw ConfigError("data.train_images", "required when data.source = idx");
    if (command == "classify") {
        if (cfg.data.source != "idx") throw ConfigError("data.source", "classify needs labelled idx data");
        if (cfg.data.train_labels.empty()) throw ConfigError("data.train_labels", "required by classify");
        if (!cfg.data.test_images.empty() && cfg.data.test_labels.empty())
            throw ConfigError("data.test_labels", "required when data.test_images is set");
    }
    if (cfg.data.source == "synthetic" && cfg.data.synthetic_samples == 0)
        throw ConfigError("data.synthetic_samples", "must be at least 1");
}

BinaryDataset load_idx_set(const std::string& images, const std::string& labels, std::size_t limit,
                           const DataConfig& data, Rng& rng) {
    const BinarizeMode mode = data.binarize == "stochastic" ? BinarizeMode::Stochastic : BinarizeMode::Threshold;
    BinaryDataset set = binarize(read_idx(images), mode, data.threshold, rng);
    if (!labels.empty()) attach_labels(set, read_idx(labels));
    if (limit != 0 && limit < set.size()) {
        set.samples.resize(limit);
        if (!set.labels.empty()) set.labels.resize(limit);
    }
    return set;
}

struct LoadedData {
    BinaryDataset train;
    BinaryDataset test;
    std::vector<double> table;
};

LoadedData load_data(const ExperimentConfig& cfg, std::uint64_t seed) {
    Rng rng = Rng::derive(seed, {kDataStream});
    LoadedData out;
    if (cfg.data.source == "synthetic") {
        auto sets = gen_synthetic(1, cfg.data.synthetic_samples, cfg.data.synthetic_visible, rng);
        out.train = std::move(sets.front().data);
        out.table = std::move(sets.front().table);
        return out;
    }
    out.train = load_idx_set(cfg.data.train_images, cfg.data.train_labels, cfg.data.limit, cfg.data, rng);
    if (out.train.size() == 0) throw std::runtime_error("training set " + cfg.data.train_images + " is empty");
    if (!cfg.data.test_images.empty())
        out.test = load_idx_set(cfg.data.test_images, cfg.data.test_labels, cfg.data.test_limit, cfg.data, rng);
    if (out.train.visible_size() <= kTableVisibleLimit)
        out.table = empirical_distribution(out.train.samples, out.train.visible_size());
    return out;
}

HwConfig effective_hw(const ExperimentConfig& cfg, std::uint64_t seed) {
    HwConfig hw = cfg.hw;
    if (hw.seed == 0) hw.seed = substrate_seed(seed, 0);
    return hw;
}

AisConfig effective_ais(const ExperimentConfig& cfg, std::span<const BitVector> data) {
    AisConfig ais = cfg.ais;
    if (ais.base == AisBase::FittedVisibleBias) {
        if (data.empty()) throw ConfigError("ais.base", "fitted base needs a dataset matching the model");
        ais.base_visible_bias = fit_base_visible_bias(data);
    }
    return ais;
}

struct TrainedModel {
    TrainTrace trace;
    HwConfig hw;
};

TrainedModel train_model(const ExperimentConfig& cfg, const BinaryDataset& data, std::uint64_t seed) {
    TrainedModel out;
    out.hw = effective_hw(cfg, seed);
    Rng init_rng = Rng::derive(seed, {kInitStream});
    const RbmParams init = initial_params(data.visible_size(), cfg.hidden, init_rng, cfg.init_sd);
    Rng rng = run_stream(seed, 0);
    out.trace = train(init, data.samples, cfg.train, out.hw, rng);
    return out;
}

void append_report(std::vector<ResultRow>& rows, const std::string& experiment, const std::string& algo,
                   std::uint64_t seed, const EvalReport& report) {
    for (std::size_t i = 0; i < report.trajectory.size(); ++i) {
        const auto it = static_cast<std::int64_t>(report.trajectory[i].first);
        rows.push_back({experiment, algo, seed, it, "avg_log_prob", report.trajectory[i].second});
        rows.push_back({experiment, algo, seed, it, "avg_log_prob_smoothed", report.smoothed[i]});
    }
    const auto last = report.trajectory.empty() ? 0 : static_cast<std::int64_t>(report.trajectory.back().first);
    rows.push_back({experiment, algo, seed, last, "log_z", report.log_z});
    rows.push_back({experiment, algo, seed, last, "log_z_stderr", report.log_z_stderr});
    if (report.kl) rows.push_back({experiment, algo, seed, last, "kl", *report.kl});
}

Outputs cmd_train(ExperimentConfig& cfg, std::uint64_t seed, Timer& timer) {
    const LoadedData data = load_data(cfg, seed);
    timer.mark("load");
    TrainedModel model = train_model(cfg, data.train, seed);
    cfg.hw = model.hw;
    timer.mark("train");
    Rng ais_rng = Rng::derive(seed, {kAisStream});
    const EvalReport report = evaluate_trace(model.trace, data.train.samples, data.table,
                                             effective_ais(cfg, data.train.samples), ais_rng, cfg.sweep.window);
    timer.mark("evaluate");
    Outputs out;
    append_report(out.rows, cfg.name, std::string(to_string(cfg.train.algo)), seed, report);
    out.model = model.trace.final;
    return out;
}

Outputs cmd_eval_ais(ExperimentConfig& cfg, std::uint64_t seed, const std::string& model_path, Timer& timer) {
    const RbmParams params = read_model(model_path);
    LoadedData data;
    const bool synthetic_matches =
        cfg.data.source == "synthetic" && cfg.data.synthetic_visible == params.visible_size();
    if (cfg.data.source == "idx" || synthetic_matches) data = load_data(cfg, seed);
    if (data.train.size() > 0 && data.train.visible_size() != params.visible_size())
        throw DimensionError("dataset visible units", params.visible_size(), data.train.visible_size());
    timer.mark("load");
    Rng rng = Rng::derive(seed, {kAisStream});
    const AisResult ais = ais_log_partition(params, effective_ais(cfg, data.train.samples), rng);
    timer.mark("ais");

    Outputs out;
    const std::string algo = "ais";
    out.rows.push_back({cfg.name, algo, seed, 0, "log_z", ais.log_z});
    out.rows.push_back({cfg.name, algo, seed, 0, "log_z_stderr", ais.std_error});
    out.rows.push_back({cfg.name, algo, seed, 0, "runs_used", static_cast<double>(ais.used)});
    out.rows.push_back({cfg.name, algo, seed, 0, "runs_dropped", static_cast<double>(ais.dropped)});
    if (params.visible_size() + params.hidden_size() <= kDefaultEnumerationLimit)
        out.rows.push_back({cfg.name, "exact", seed, 0, "log_z", exact_partition(params)});
    if (data.train.size() > 0)
        out.rows.push_back({cfg.name, algo, seed, 0, "avg_log_prob", avg_log_prob(params, data.train.samples, ais.log_z)});
    timer.mark("report");
    return out;
}

Outputs cmd_bias_bench(ExperimentConfig& cfg, std::uint64_t seed, Timer& timer) {
    BiasBenchConfig bench = cfg.bias;
    bench.hw = cfg.hw;
    bench.workers = cfg.workers;
    const BiasBenchResult result = bias_experiment(bench, seed);
    timer.mark("bench");

    Outputs out;
    const auto last = static_cast<std::int64_t>(bench.iterations);
    std::string records = "distribution,run,algo,kl\n";
    for (const auto& r : result.records) {
        out.rows.push_back({cfg.name, to_string(r.algo), seed, last, "kl", r.kl});
        records += std::to_string(r.distribution) + ',' + std::to_string(r.run) + ',' + to_string(r.algo) + ',' +
                   format_double(r.kl) + '\n';
    }
    std::string cdf = "algo,kl,cdf\n";
    for (const auto algo : bench.algorithms) {
        out.rows.push_back({cfg.name, to_string(algo), seed, last, "median_kl", result.median(algo)});
        for (const auto& [kl, frac] : result.cdf(algo))
            cdf += to_string(algo) + ',' + format_double(kl) + ',' + format_double(frac) + '\n';
    }
    out.extra_files.emplace_back("kl_records.csv", std::move(records));
    out.extra_files.emplace_back("cdf.csv", std::move(cdf));
    return out;
}

Outputs cmd_noise_sweep(ExperimentConfig& cfg, std::uint64_t seed, Timer& timer) {
    const LoadedData data = load_data(cfg, seed);
    timer.mark("load");
    std::vector<NoisePoint> grid;
    for (double v : cfg.sweep.variation)
        for (double n : cfg.sweep.noise) grid.push_back({v, n});
    SweepSpec spec;
    spec.train = cfg.train;
    spec.hw = cfg.hw;
    spec.hidden = cfg.hidden;
    spec.init_sd = cfg.init_sd;
    spec.seeds = cfg.sweep.seeds;
    spec.window = cfg.sweep.window;
    spec.ais = effective_ais(cfg, data.train.samples);
    spec.workers = cfg.workers;
    const auto results = noise_sweep(grid, spec, data.train.samples, data.table, seed);
    timer.mark("sweep");

    Outputs out;
    const std::string algo(to_string(cfg.train.algo));
    for (const auto& r : results) {
        const std::string label =
            cfg.name + "/var=" + shortest(r.point.variation_rms) + "/noise=" + shortest(r.point.noise_rms);
        append_report(out.rows, label, algo, r.seed, r.report);
    }
    return out;
}

Outputs cmd_classify(ExperimentConfig& cfg, std::uint64_t seed, Timer& timer) {
    const LoadedData data = load_data(cfg, seed);
    timer.mark("load");
    TrainedModel model = train_model(cfg, data.train, seed);
    cfg.hw = model.hw;
    timer.mark("train");
    const RbmParams& params = model.trace.final;
    HeadOptions options;
    options.learning_rate = cfg.classify.learning_rate;
    options.epochs = cfg.classify.epochs;
    const Eigen::MatrixXd train_features = hidden_features(params, data.train.samples);
    const LogisticHead head = classifier_head_train(train_features, data.train.labels, cfg.classify.reg, options);
    timer.mark("head");

    Outputs out;
    const std::string algo(to_string(cfg.train.algo));
    const auto last = static_cast<std::int64_t>(cfg.train.iterations);
    out.rows.push_back({cfg.name, algo, seed, last, "train_accuracy",
                        classifier_accuracy(head, train_features, data.train.labels)});
    if (data.test.size() > 0) {
        if (data.test.visible_size() != params.visible_size())
            throw DimensionError("test set visible units", params.visible_size(), data.test.visible_size());
        out.rows.push_back({cfg.name, algo, seed, last, "test_accuracy",
                            classifier_accuracy(head, hidden_features(params, data.test.samples), data.test.labels)});
    }
    if (!head.loss_history.empty())
        out.rows.push_back({cfg.name, algo, seed, last, "head_loss", head.loss_history.back()});
    out.model = params;
    timer.mark("evaluate");
    return out;
}

std::string manifest(const Options& o, const std::vector<std::string>& args, const Timer& timer) {
    std::ostringstream m;
    m << "command = " << o.command << '\n';
    m << "seed = " << o.seed << '\n';
    m << "version = " << ISINGRBM_VERSION << '\n';
    m << "eigen = " << EIGEN_WORLD_VERSION << '.' << EIGEN_MAJOR_VERSION << '.' << EIGEN_MINOR_VERSION << '\n';
#ifdef __VERSION__
    m << "compiler = " << __VERSION__ << '\n';
#endif
    m << "argv =";
    for (const auto& a : args) m << ' ' << a;
    m << '\n';
    m << "reproduce = isingrbm " << o.command << " --config resolved.cfg --seed " << o.seed;
    if (!o.model_path.empty()) m << " --model " << o.model_path;
    m << '\n';
    const std::time_t now = std::time(nullptr);
    char stamp[32];
    std::strftime(stamp, sizeof stamp, "%Y-%m-%dT%H:%M:%SZ", std::gmtime(&now));
    m << "finished_utc = " << stamp << '\n';
    for (const auto& [stage, secs] : timer.stages()) m << "time." << stage << " = " << secs << '\n';
    m << "time.total = " << timer.total() << '\n';
    return m.str();
}

void add_common(CLI::App& sub, Options& o) {
    sub.add_option("--config", o.config_path, "INI config file")->check(CLI::ExistingFile);
    sub.add_option("--preset", o.preset_name, "named experiment shape applied before --config");
    sub.add_option("--set", o.sets, "override, section.key=value (repeatable)");
    sub.add_option("--out-dir", o.out_dir, std::string("output directory (default $") + kOutDirEnv + " or ./results)");
    sub.add_option("--seed", o.seed, "master seed")->required();
    sub.add_option("--workers", o.workers, "worker threads for bias-bench and noise-sweep");
}

}  // namespace

int run(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
    Options o;
    CLI::App app{"Ising-substrate RBM training experiments", "isingrbm"};
    app.require_subcommand(1);
    app.set_version_flag("--version", ISINGRBM_VERSION);

    auto* train = app.add_subcommand("train", "train one model and report its likelihood trajectory");
    auto* eval = app.add_subcommand("eval-ais", "estimate log Z of a saved model with AIS");
    auto* bias = app.add_subcommand("bias-bench", "KL bias benchmark on random product distributions");
    auto* sweep = app.add_subcommand("noise-sweep", "train across a variation x noise grid");
    auto* classify = app.add_subcommand("classify", "train features and a logistic head on labelled data");
    for (auto* sub : {train, eval, bias, sweep, classify}) add_common(*sub, o);
    for (auto* sub : {train, sweep, classify}) {
        sub->add_option("--algo", o.algo, "cd | gs | bgf | ml");
        sub->add_option("--batch-size", o.batch_size, "minibatch size");
    }
    bias->add_option("--algo", o.algo, "comma list of ml, cd1, cdk, bgf");
    eval->add_option("--model", o.model_path, "model file written by train")->required()->check(CLI::ExistingFile);

    try {
        std::vector<std::string> reversed(args.rbegin(), args.rend());
        app.parse(reversed);
    } catch (const CLI::CallForHelp&) {
        out << app.help();
        return kExitOk;
    } catch (const CLI::CallForAllHelp&) {
        out << app.help("", CLI::AppFormatMode::All);
        return kExitOk;
    } catch (const CLI::CallForVersion&) {
        out << ISINGRBM_VERSION << '\n';
        return kExitOk;
    } catch (const CLI::ParseError& e) {
        err << "isingrbm: " << e.what() << '\n';
        return kExitUsage;
    }
    o.command = app.get_subcommands().front()->get_name();

    ExperimentConfig cfg;
    try {
        cfg = resolve(o);
        check_config(cfg, o.command);
    } catch (const ConfigError& e) {
        err << "isingrbm: " << e.what() << '\n';
        return kExitUsage;
    }

    if (o.out_dir.empty()) {
        const char* env = std::getenv(kOutDirEnv);
        o.out_dir = env && *env ? env : "results";
    }

    try {
        Timer timer;
        Outputs result;
        if (o.command == "train") result = cmd_train(cfg, o.seed, timer);
        else if (o.command == "eval-ais") result = cmd_eval_ais(cfg, o.seed, o.model_path, timer);
        else if (o.command == "bias-bench") result = cmd_bias_bench(cfg, o.seed, timer);
        else if (o.command == "noise-sweep") result = cmd_noise_sweep(cfg, o.seed, timer);
        else result = cmd_classify(cfg, o.seed, timer);

        const fs::path dir(o.out_dir);
        fs::create_directories(dir);
        write_results(dir / "results.csv", result.rows);
        for (const auto& [name, text] : result.extra_files) write_text_file(dir / name, text);
        if (result.model) write_model(dir / "model.txt", *result.model);
        write_text_file(dir / "resolved.cfg", format_config(cfg));
        write_text_file(dir / "manifest.txt", manifest(o, args, timer));
        out << o.command << ": " << result.rows.size() << " result rows written to " << dir.string() << '\n';
    } catch (const ConfigError& e) {
        err << "isingrbm: " << e.what() << '\n';
        return kExitUsage;
    } catch (const std::exception& e) {
        err << "isingrbm: " << o.command << " failed: " << e.what() << '\n';
        return kExitRuntime;
    }
    return kExitOk;
}

int run(int argc, const char* const* argv) {
    std::vector<std::string> args;
    for (int i = 1; i < argc; ++i) args.emplace_back(argv[i]);
    return run(args, std::cout, std::cerr);
}

}  // namespace isingrbm::cli
