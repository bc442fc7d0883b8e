#include "isingrbm/config.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <functional>
#include <sstream>

namespace isingrbm {

ConfigError::ConfigError(const std::string& key, const std::string& message)
    : std::runtime_error(key.empty() ? "config error: " + message : "config error in '" + key + "': " + message),
      key_(key) {}

namespace {

std::string trim(const std::string& s) {
    const auto first = s.find_first_not_of(" \t\r");
    if (first == std::string::npos) return "";
    const auto last = s.find_last_not_of(" \t\r");
    return s.substr(first, last - first + 1);
}

std::string shortest(double x) {
    char buf[64];
    const auto [ptr, ec] = std::to_chars(buf, buf + sizeof buf, x);
    return ec == std::errc{} ? std::string(buf, ptr) : format_double(x);
}

double to_double(const std::string& key, const std::string& v) {
    char* end = nullptr;
    const double x = std::strtod(v.c_str(), &end);
    if (v.empty() || end != v.c_str() + v.size()) throw ConfigError(key, "'" + v + "' is not a number");
    return x;
}

template <typename Int>
Int to_int(const std::string& key, const std::string& v) {
    Int x{};
    const auto [ptr, ec] = std::from_chars(v.data(), v.data() + v.size(), x);
    if (v.empty() || ec != std::errc{} || ptr != v.data() + v.size())
        throw ConfigError(key, "'" + v + "' is not a valid integer");
    return x;
}

bool to_bool(const std::string& key, const std::string& v) {
    if (v == "true" || v == "1" || v == "yes") return true;
    if (v == "false" || v == "0" || v == "no") return false;
    throw ConfigError(key, "'" + v + "' is not a boolean (true/false)");
}

std::vector<std::string> split_list(const std::string& v) {
    std::vector<std::string> out;
    std::string cur;
    std::istringstream in(v);
    while (std::getline(in, cur, ',')) {
        cur = trim(cur);
        if (!cur.empty()) out.push_back(cur);
    }
    return out;
}

struct Key {
    std::string name;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
    std::function<std::string(const ExperimentConfig&)> get;
};

template <typename Access>
Key real(std::string name, Access access) {
    return {std::move(name), [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
                access(c) = to_double(k, v);
            },
            [access](const ExperimentConfig& c) { return shortest(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Key count(std::string name, Access access) {
    return {std::move(name),
            [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
                access(c) = to_int<std::remove_reference_t<decltype(access(c))>>(k, v);
            },
            [access](const ExperimentConfig& c) { return std::to_string(access(const_cast<ExperimentConfig&>(c))); }};
}

template <typename Access>
Key flag(std::string name, Access access) {
    return {std::move(name),
            [access](ExperimentConfig& c, const std::string& k, const std::string& v) { access(c) = to_bool(k, v); },
            [access](const ExperimentConfig& c) {
                return std::string(access(const_cast<ExperimentConfig&>(c)) ? "true" : "false");
            }};
}

template <typename Access>
Key text(std::string name, Access access) {
    return {std::move(name), [access](ExperimentConfig& c, const std::string&, const std::string& v) { access(c) = v; },
            [access](const ExperimentConfig& c) { return access(const_cast<ExperimentConfig&>(c)); }};
}

template <typename Access>
Key choice(std::string name, std::vector<std::string> allowed, Access access) {
    return {std::move(name),
            [access, allowed](ExperimentConfig& c, const std::string& k, const std::string& v) {
                if (std::find(allowed.begin(), allowed.end(), v) == allowed.end()) {
                    std::string opts;
                    for (const auto& a : allowed) opts += (opts.empty() ? "" : ", ") + a;
                    throw ConfigError(k, "'" + v + "' is not one of: " + opts);
                }
                access(c) = v;
            },
            [access](const ExperimentConfig& c) { return access(const_cast<ExperimentConfig&>(c)); }};
}

template <typename Access>
Key real_list(std::string name, Access access) {
    return {std::move(name),
            [access](ExperimentConfig& c, const std::string& k, const std::string& v) {
                std::vector<double> out;
                for (const auto& item : split_list(v)) out.push_back(to_double(k, item));
                if (out.empty()) throw ConfigError(k, "list is empty");
                access(c) = std::move(out);
            },
            [access](const ExperimentConfig& c) {
                std::string s;
                for (double x : access(const_cast<ExperimentConfig&>(c))) s += (s.empty() ? "" : ",") + shortest(x);
                return s;
            }};
}

const std::vector<Key>& key_table() {
    using C = ExperimentConfig;
    static const std::vector<Key> table = {
        text("experiment.name", [](C& c) -> std::string& { return c.name; }),
        choice("data.source", {"synthetic", "idx"}, [](C& c) -> std::string& { return c.data.source; }),
        text("data.train_images", [](C& c) -> std::string& { return c.data.train_images; }),
        text("data.train_labels", [](C& c) -> std::string& { return c.data.train_labels; }),
        text("data.test_images", [](C& c) -> std::string& { return c.data.test_images; }),
        text("data.test_labels", [](C& c) -> std::string& { return c.data.test_labels; }),
        choice("data.binarize", {"threshold", "stochastic"}, [](C& c) -> std::string& { return c.data.binarize; }),
        real("data.threshold", [](C& c) -> double& { return c.data.threshold; }),
        count("data.limit", [](C& c) -> std::size_t& { return c.data.limit; }),
        count("data.test_limit", [](C& c) -> std::size_t& { return c.data.test_limit; }),
        count("data.synthetic_samples", [](C& c) -> std::size_t& { return c.data.synthetic_samples; }),
        count("data.synthetic_visible", [](C& c) -> std::size_t& { return c.data.synthetic_visible; }),
        count("model.hidden", [](C& c) -> std::size_t& { return c.hidden; }),
        real("model.init_sd", [](C& c) -> double& { return c.init_sd; }),
        Key{"train.algo",
            [](C& c, const std::string& k, const std::string& v) {
                try {
                    c.train.algo = parse_algorithm(v);
                } catch (const std::invalid_argument& e) {
                    throw ConfigError(k, e.what());
                }
            },
            [](const C& c) { return std::string(to_string(c.train.algo)); }},
        real("train.alpha", [](C& c) -> double& { return c.train.alpha; }),
        count("train.k", [](C& c) -> std::size_t& { return c.train.k; }),
        count("train.batch_size", [](C& c) -> std::size_t& { return c.train.batch_size; }),
        count("train.iterations", [](C& c) -> std::size_t& { return c.train.iterations; }),
        count("train.particles", [](C& c) -> std::size_t& { return c.train.particles; }),
        flag("train.persistent", [](C& c) -> bool& { return c.train.persistent; }),
        count("train.snapshot_every", [](C& c) -> std::size_t& { return c.train.snapshot_every; }),
        count("train.anneal_passes", [](C& c) -> std::size_t& { return c.train.anneal_passes; }),
        flag("train.shuffle", [](C& c) -> bool& { return c.train.shuffle; }),
        real("hw.variation_rms", [](C& c) -> double& { return c.hw.variation_rms; }),
        real("hw.noise_rms", [](C& c) -> double& { return c.hw.noise_rms; }),
        real("hw.sigmoid_gain", [](C& c) -> double& { return c.hw.sigmoid_gain; }),
        real("hw.sigmoid_offset", [](C& c) -> double& { return c.hw.sigmoid_offset; }),
        real("hw.gain_variation_rms", [](C& c) -> double& { return c.hw.gain_variation_rms; }),
        real("hw.w_min", [](C& c) -> double& { return c.hw.w_min; }),
        real("hw.w_max", [](C& c) -> double& { return c.hw.w_max; }),
        real("hw.pump_step", [](C& c) -> double& { return c.hw.pump_step; }),
        Key{"hw.pump_mode",
            [](C& c, const std::string& k, const std::string& v) {
                if (v == "linear") c.hw.pump_mode = PumpMode::LinearHeadroom;
                else if (v == "ideal") c.hw.pump_mode = PumpMode::Ideal;
                else throw ConfigError(k, "'" + v + "' is not one of: linear, ideal");
            },
            [](const C& c) { return std::string(c.hw.pump_mode == PumpMode::Ideal ? "ideal" : "linear"); }},
        count("hw.readout_bits", [](C& c) -> int& { return c.hw.readout_bits; }),
        real("hw.anneal_t_start", [](C& c) -> double& { return c.hw.anneal_t_start; }),
        count("hw.seed", [](C& c) -> std::uint64_t& { return c.hw.seed; }),
        count("ais.n_temps", [](C& c) -> std::size_t& { return c.ais.n_temps; }),
        count("ais.n_runs", [](C& c) -> std::size_t& { return c.ais.n_runs; }),
        Key{"ais.base",
            [](C& c, const std::string& k, const std::string& v) {
                if (v == "uniform") c.ais.base = AisBase::Uniform;
                else if (v == "fitted") c.ais.base = AisBase::FittedVisibleBias;
                else throw ConfigError(k, "'" + v + "' is not one of: uniform, fitted");
            },
            [](const C& c) { return std::string(c.ais.base == AisBase::Uniform ? "uniform" : "fitted"); }},
        count("bias.n_distributions", [](C& c) -> std::size_t& { return c.bias.n_distributions; }),
        count("bias.samples_per_dist", [](C& c) -> std::size_t& { return c.bias.samples_per_dist; }),
        count("bias.visible", [](C& c) -> std::size_t& { return c.bias.visible; }),
        count("bias.hidden", [](C& c) -> std::size_t& { return c.bias.hidden; }),
        count("bias.iterations", [](C& c) -> std::size_t& { return c.bias.iterations; }),
        count("bias.runs", [](C& c) -> std::size_t& { return c.bias.runs; }),
        Key{"bias.algorithms",
            [](C& c, const std::string& k, const std::string& v) {
                std::vector<BiasAlgorithm> algos;
                for (const auto& item : split_list(v)) {
                    try {
                        algos.push_back(parse_bias_algorithm(item));
                    } catch (const std::invalid_argument& e) {
                        throw ConfigError(k, e.what());
                    }
                }
                if (algos.empty()) throw ConfigError(k, "list is empty");
                c.bias.algorithms = std::move(algos);
            },
            [](const C& c) {
                std::string s;
                for (auto a : c.bias.algorithms) s += (s.empty() ? "" : ",") + to_string(a);
                return s;
            }},
        real("bias.ml_alpha", [](C& c) -> double& { return c.bias.ml_alpha; }),
        real("bias.cd_alpha", [](C& c) -> double& { return c.bias.cd_alpha; }),
        real("bias.bgf_alpha", [](C& c) -> double& { return c.bias.bgf_alpha; }),
        count("bias.cdk_k", [](C& c) -> std::size_t& { return c.bias.cdk_k; }),
        count("bias.bgf_particles", [](C& c) -> std::size_t& { return c.bias.bgf_particles; }),
        count("bias.bgf_anneal_passes", [](C& c) -> std::size_t& { return c.bias.bgf_anneal_passes; }),
        real("bias.init_sd", [](C& c) -> double& { return c.bias.init_sd; }),
        real_list("sweep.variation", [](C& c) -> std::vector<double>& { return c.sweep.variation; }),
        real_list("sweep.noise", [](C& c) -> std::vector<double>& { return c.sweep.noise; }),
        count("sweep.seeds", [](C& c) -> std::size_t& { return c.sweep.seeds; }),
        count("sweep.window", [](C& c) -> std::size_t& { return c.sweep.window; }),
        real("classify.reg", [](C& c) -> double& { return c.classify.reg; }),
        real("classify.learning_rate", [](C& c) -> double& { return c.classify.learning_rate; }),
        count("classify.epochs", [](C& c) -> std::size_t& { return c.classify.epochs; }),
        count("run.workers", [](C& c) -> std::size_t& { return c.workers; }),
    };
    return table;
}

}  // namespace

void apply_setting(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value) {
    const auto& table = key_table();
    const auto it = std::find_if(table.begin(), table.end(), [&](const Key& k) { return k.name == dotted_key; });
    if (it == table.end()) throw ConfigError(dotted_key, "unknown key");
    it->set(cfg, dotted_key, trim(value));
}

ExperimentConfig parse_config(const std::string& text, ExperimentConfig base) {
    std::istringstream in(text);
    std::string line;
    std::string section;
    std::size_t lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        line = trim(line);
        if (line.empty() || line[0] == '#' || line[0] == ';') continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw ConfigError("", "line " + std::to_string(lineno) + ": unterminated section header");
            section = trim(line.substr(1, line.size() - 2));
            if (section.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": empty section name");
            continue;
        }
        const auto eq = line.find('=');
        if (eq == std::string::npos)
            throw ConfigError("", "line " + std::to_string(lineno) + ": expected 'key = value'");
        const std::string key = trim(line.substr(0, eq));
        if (key.empty()) throw ConfigError("", "line " + std::to_string(lineno) + ": missing key name");
        if (section.empty())
            throw ConfigError(key, "line " + std::to_string(lineno) + ": key appears before any [section]");
        apply_setting(base, section + "." + key, line.substr(eq + 1));
    }
    return base;
}

ExperimentConfig read_config(const std::filesystem::path& path, ExperimentConfig base) {
    std::string text;
    try {
        text = read_text_file(path);
    } catch (const std::runtime_error& e) {
        throw ConfigError("", e.what());
    }
    return parse_config(text, std::move(base));
}

std::string format_config(const ExperimentConfig& cfg) {
    std::string out;
    std::string section;
    for (const auto& key : key_table()) {
        const auto dot = key.name.find('.');
        const std::string sec = key.name.substr(0, dot);
        if (sec != section) {
            if (!section.empty()) out += '\n';
            out += '[' + sec + "]\n";
            section = sec;
        }
        out += key.name.substr(dot + 1) + " = " + key.get(cfg) + '\n';
    }
    return out;
}

std::vector<std::string> config_keys() {
    std::vector<std::string> out;
    for (const auto& k : key_table()) out.push_back(k.name);
    return out;
}

std::vector<std::string> preset_names() {
    return {"appendix-a", "appendix-a-desk", "noise-grid-25", "mnist-784x200", "mnist-desk", "synthetic-12x4"};
}

ExperimentConfig preset(const std::string& name) {
    ExperimentConfig c;
    c.name = name;
    if (name == "appendix-a" || name == "appendix-a-desk") {
        c.bias.n_distributions = name == "appendix-a" ? 60 : 10;
        c.bias.runs = name == "appendix-a" ? 400 : 40;
        c.bias.samples_per_dist = 100;
        c.bias.visible = 12;
        c.bias.hidden = 4;
        c.bias.iterations = 1000;
        c.bias.algorithms = {BiasAlgorithm::ML, BiasAlgorithm::CD1, BiasAlgorithm::BGF};
        c.bias.ml_alpha = 1.0;
        c.bias.cd_alpha = 1.0;
        c.hw.pump_mode = PumpMode::Ideal;
        c.hw.readout_bits = 0;
        return c;
    }
    if (name == "synthetic-12x4" || name == "noise-grid-25") {
        c.data.source = "synthetic";
        c.data.synthetic_samples = 100;
        c.data.synthetic_visible = 12;
        c.hidden = 4;
        c.train.algo = Algorithm::BGF;
        c.train.alpha = 0.001;
        c.train.batch_size = 1;
        c.train.iterations = 1000;
        c.train.particles = 10;
        c.train.snapshot_every = 10;
        c.hw.readout_bits = 0;
        if (name == "noise-grid-25") {
            c.sweep.variation = {0.03, 0.10, 0.17, 0.24, 0.30};
            c.sweep.noise = {0.03, 0.10, 0.17, 0.24, 0.30};
        }
        return c;
    }
    if (name == "mnist-784x200" || name == "mnist-desk") {
        c.data.source = "idx";
        c.data.train_images = "data/mnist/train-images-idx3-ubyte";
        c.data.train_labels = "data/mnist/train-labels-idx1-ubyte";
        c.data.test_images = "data/mnist/t10k-images-idx3-ubyte";
        c.data.test_labels = "data/mnist/t10k-labels-idx1-ubyte";
        c.hidden = name == "mnist-784x200" ? 200 : 64;
        c.data.limit = name == "mnist-784x200" ? 0 : 10000;
        c.train.algo = Algorithm::CD;
        c.train.alpha = 0.1;
        c.train.k = 1;
        c.train.batch_size = 100;
        c.train.iterations = name == "mnist-784x200" ? 10 : 3;
        c.train.snapshot_every = 1;
        c.ais.base = AisBase::FittedVisibleBias;
        return c;
    }
    throw ConfigError("", "unknown preset '" + name + "'");
}

}  // namespace isingrbm
