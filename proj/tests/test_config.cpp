#include <doctest.h>

#include <filesystem>

#include "isingrbm/config.hpp"

using namespace isingrbm;

TEST_SUITE("config") {

TEST_CASE("parse sections, comments and values") {
    const ExperimentConfig c = parse_config(R"(
# comment
[experiment]
name = demo
[model]
hidden = 7
; another comment
[train]
algo = bgf
alpha = 0.25
batch_size = 1
[hw]
noise_rms = 0.1
pump_mode = ideal
[bias]
algorithms = ml, cdk
[sweep]
variation = 0.03,0.1
[run]
workers = 3
)");
    CHECK(c.name == "demo");
    CHECK(c.hidden == 7);
    CHECK(c.train.algo == Algorithm::BGF);
    CHECK(c.train.alpha == 0.25);
    CHECK(c.hw.noise_rms == 0.1);
    CHECK(c.hw.pump_mode == PumpMode::Ideal);
    CHECK(c.bias.algorithms == std::vector<BiasAlgorithm>{BiasAlgorithm::ML, BiasAlgorithm::CDk});
    CHECK(c.sweep.variation == std::vector<double>{0.03, 0.1});
    CHECK(c.workers == 3);
}

TEST_CASE("errors name the key") {
    auto key_of = [](const std::string& text) {
        try {
            parse_config(text);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("<none>");
    };
    CHECK(key_of("[train]\nalhpa = 1\n") == "train.alhpa");
    CHECK(key_of("[train]\nalpha = fast\n") == "train.alpha");
    CHECK(key_of("[train]\nalgo = sgd\n") == "train.algo");
    CHECK(key_of("[hw]\npump_mode = cubic\n") == "hw.pump_mode");
    CHECK(key_of("[model]\nhidden = -3\n") == "model.hidden");
    CHECK(key_of("hidden = 3\n") == "hidden");
    CHECK(key_of("[nowhere]\nx = 1\n") == "nowhere.x");

    ExperimentConfig c;
    CHECK_THROWS_AS(apply_setting(c, "train.nope", "1"), ConfigError);
    CHECK_THROWS_AS(preset("no-such-preset"), ConfigError);
}

TEST_CASE("format round-trips every key") {
    ExperimentConfig c = preset("noise-grid-25");
    c.train.alpha = 0.1 + 0.2;
    c.hw.seed = 123456789012345ULL;
    c.data.train_images = "some/path.idx";
    const std::string text = format_config(c);
    const ExperimentConfig back = parse_config(text);
    CHECK(format_config(back) == text);
    for (const std::string& key : config_keys()) {
        const auto dot = key.find('.');
        CHECK(text.find(key.substr(dot + 1) + " = ") != std::string::npos);
    }
}

TEST_CASE("presets are valid") {
    for (const std::string& name : preset_names()) {
        CAPTURE(name);
        const ExperimentConfig c = preset(name);
        CHECK_NOTHROW(c.hw.validate());
        CHECK_NOTHROW(c.train.validate());
        CHECK_NOTHROW(parse_config(format_config(c)));
    }
    const ExperimentConfig a = preset("appendix-a");
    CHECK(a.bias.n_distributions == 60);
    CHECK(a.bias.runs == 400);
    CHECK(a.bias.visible == 12);
    CHECK(a.bias.hidden == 4);
    CHECK(a.bias.iterations == 1000);
    CHECK(a.bias.samples_per_dist == 100);
    const ExperimentConfig g = preset("noise-grid-25");
    CHECK(g.sweep.variation.size() * g.sweep.noise.size() == 25);
    CHECK(preset("mnist-desk").hidden == 64);
    CHECK(preset("mnist-784x200").hidden == 200);
}

TEST_CASE("shipped config files parse") {
    std::size_t seen = 0;
    for (const auto& entry : std::filesystem::directory_iterator(ISINGRBM_SOURCE_DIR "/configs")) {
        if (entry.path().extension() != ".ini") continue;
        CAPTURE(entry.path().string());
        CHECK_NOTHROW(read_config(entry.path()));
        ++seen;
    }
    CHECK(seen >= 2);
}

}  // TEST_SUITE
