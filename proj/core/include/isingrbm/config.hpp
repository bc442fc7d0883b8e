#pragma once

#include <filesystem>
#include <stdexcept>
#include <string>
#include <vector>

#include "isingrbm/data_io.hpp"
#include "isingrbm/eval.hpp"
#include "isingrbm/hw_model.hpp"
#include "isingrbm/trainers.hpp"

namespace isingrbm {

// Bad, unknown or missing configuration key. key() is "section.name" or
// empty for syntax errors.
class ConfigError : public std::runtime_error {
public:
    ConfigError(const std::string& key, const std::string& message);
    const std::string& key() const noexcept { return key_; }

private:
    std::string key_;
};

struct DataConfig {
    std::string source = "synthetic";  // synthetic | idx
    std::string train_images;
    std::string train_labels;
    std::string test_images;
    std::string test_labels;
    std::string binarize = "threshold";  // threshold | stochastic
    double threshold = 0.5;
    std::size_t limit = 0;       // 0 = all training samples
    std::size_t test_limit = 0;  // 0 = all test samples
    std::size_t synthetic_samples = 100;
    std::size_t synthetic_visible = 12;
};

struct SweepConfig {
    std::vector<double> variation = {0.0};
    std::vector<double> noise = {0.0};
    std::size_t seeds = 1;
    std::size_t window = kSmoothingWindow;
};

struct ClassifyConfig {
    double reg = 1e-4;
    double learning_rate = 0.5;
    std::size_t epochs = 200;
};

// Everything a CLI run needs; one INI section per member group.
struct ExperimentConfig {
    std::string name = "experiment";
    DataConfig data;
    std::size_t hidden = 4;
    double init_sd = 0.01;
    TrainConfig train;
    HwConfig hw;
    AisConfig ais;
    BiasBenchConfig bias;
    SweepConfig sweep;
    ClassifyConfig classify;
    std::size_t workers = 1;
};

// Starts from defaults and applies every `key = value` line. Lines starting
// with '#' or ';' are comments; `[section]` opens a section.
ExperimentConfig parse_config(const std::string& text, ExperimentConfig base = {});
ExperimentConfig read_config(const std::filesystem::path& path, ExperimentConfig base = {});

// `dotted_key` is "section.name"; throws ConfigError naming the key.
void apply_setting(ExperimentConfig& cfg, const std::string& dotted_key, const std::string& value);

// Canonical INI text of every key, in a fixed order.
std::string format_config(const ExperimentConfig& cfg);

std::vector<std::string> config_keys();

// Named experiment shapes. Throws ConfigError for unknown names.
ExperimentConfig preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace isingrbm
