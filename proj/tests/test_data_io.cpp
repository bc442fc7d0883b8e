#include <doctest.h>

#include <cmath>
#include <filesystem>

#include "isingrbm/data_io.hpp"
#include "test_util.hpp"

using namespace isingrbm;

namespace {

std::vector<std::uint8_t> idx_bytes(std::uint8_t type, std::vector<std::uint32_t> dims, std::vector<std::uint8_t> payload) {
    std::vector<std::uint8_t> out{0, 0, type, static_cast<std::uint8_t>(dims.size())};
    for (std::uint32_t d : dims) {
        out.push_back(static_cast<std::uint8_t>(d >> 24));
        out.push_back(static_cast<std::uint8_t>(d >> 16));
        out.push_back(static_cast<std::uint8_t>(d >> 8));
        out.push_back(static_cast<std::uint8_t>(d));
    }
    out.insert(out.end(), payload.begin(), payload.end());
    return out;
}

}  // namespace

TEST_SUITE("data_io") {

TEST_CASE("minimal IDX vector") {
    const IdxTensor t = parse_idx(idx_bytes(0x08, {3}, {1, 2, 3}));
    CHECK(t.dims == std::vector<std::uint32_t>{3});
    CHECK(t.elements == std::vector<std::uint8_t>{1, 2, 3});
}

TEST_CASE("IDX rank-3 tensor keeps row-major order and round-trips") {
    const auto bytes = idx_bytes(0x08, {2, 2, 2}, {10, 11, 12, 13, 14, 15, 16, 17});
    const IdxTensor t = parse_idx(bytes);
    CHECK(t.dims == std::vector<std::uint32_t>{2, 2, 2});
    CHECK(t.elements[0b101] == 15);
    CHECK(encode_idx(t) == bytes);

    test_util::TempDir dir;
    write_idx(dir.path() / "t.idx", t);
    CHECK(read_idx(dir.path() / "t.idx") == t);
}

TEST_CASE("IDX negative cases") {
    CHECK_THROWS_AS(parse_idx(idx_bytes(0x07, {1}, {0})), IdxUnsupportedType);
    CHECK_THROWS_AS(parse_idx(idx_bytes(0x0D, {1}, {0, 0, 0, 0})), IdxUnsupportedType);
    auto bad_magic = idx_bytes(0x08, {1}, {0});
    bad_magic[0] = 1;
    CHECK_THROWS_AS(parse_idx(bad_magic), IdxBadMagic);
    CHECK_THROWS_AS(parse_idx(idx_bytes(0x08, {4}, {1, 2})), IdxTruncated);
    CHECK_THROWS_AS(parse_idx(idx_bytes(0x08, {1}, {1, 2})), IdxTrailingData);
    CHECK_THROWS_AS(parse_idx(std::vector<std::uint8_t>{0, 0, 8}), IdxTruncated);
    auto short_dims = idx_bytes(0x08, {2, 2}, {});
    short_dims.resize(9);
    CHECK_THROWS_AS(parse_idx(short_dims), IdxTruncated);
    CHECK_THROWS_AS(parse_idx(idx_bytes(0x08, {}, {})), IdxFormatError);
    CHECK_THROWS_AS(read_idx("/nonexistent/file.idx"), std::runtime_error);
    try {
        parse_idx(idx_bytes(0x08, {4}, {1, 2}));
    } catch (const IdxFormatError& e) {
        CHECK(e.offset() == 10);
    }
}

TEST_CASE("binarize") {
    IdxTensor images;
    images.dims = {2, 2, 2};
    images.elements = {0, 0, 0, 0, 255, 255, 127, 128};
    Rng rng(1);
    for (BinarizeMode mode : {BinarizeMode::Threshold, BinarizeMode::Stochastic}) {
        const BinaryDataset d = binarize(images, mode, 0.5, rng);
        REQUIRE(d.size() == 2);
        CHECK(d.samples[0] == BitVector(4));
        CHECK(d.samples[1][0] == 1);
        CHECK(d.samples[1][1] == 1);
    }
    const BinaryDataset t = binarize(images, BinarizeMode::Threshold, 0.5, rng);
    CHECK(t.samples[1][2] == 0);
    CHECK(t.samples[1][3] == 1);

    IdxTensor grey;
    const std::size_t pixels = 100000;
    grey.dims = {1, static_cast<std::uint32_t>(pixels)};
    grey.elements.assign(pixels, 128);
    const BinaryDataset s = binarize(grey, BinarizeMode::Stochastic, 0.5, rng);
    const double mean = static_cast<double>(s.samples[0].count()) / pixels;
    const double p = 128.0 / 255.0;
    CHECK(std::abs(mean - p) < 3 * std::sqrt(p * (1 - p) / pixels));
}

TEST_CASE("labels") {
    IdxTensor images;
    images.dims = {3, 2};
    images.elements = {0, 255, 255, 0, 0, 0};
    Rng rng(2);
    BinaryDataset d = binarize(images, BinarizeMode::Threshold, 0.5, rng);
    IdxTensor labels;
    labels.dims = {3};
    labels.elements = {7, 1, 0};
    attach_labels(d, labels);
    CHECK(d.labels == std::vector<int>{7, 1, 0});
    labels.dims = {2};
    labels.elements = {1, 2};
    CHECK_THROWS_AS(attach_labels(d, labels), DimensionError);
}

TEST_CASE("synthetic sets") {
    Rng a(3), b(3);
    const auto sets = gen_synthetic(4, 50, 6, a);
    const auto again = gen_synthetic(4, 50, 6, b);
    REQUIRE(sets.size() == 4);
    for (std::size_t d = 0; d < sets.size(); ++d) {
        CHECK(sets[d].data.samples == again[d].data.samples);
        CHECK(sets[d].table == again[d].table);
        double total = 0.0;
        for (double x : sets[d].table) total += x;
        CHECK(total == doctest::Approx(1.0).epsilon(1e-12));
        for (double p : sets[d].bit_probabilities) {
            CHECK(p >= kSyntheticMinProb);
            CHECK(p <= kSyntheticMaxProb);
        }
        CHECK(sets[d].table == empirical_distribution(sets[d].data.samples, 6));
    }
    Rng c(4);
    const auto single = gen_synthetic(1, 1, 5, c).front();
    int support = 0;
    for (double x : single.table) support += x > 0.0;
    CHECK(support == 1);
    CHECK(single.table[single.data.samples[0].to_index()] == 1.0);
}

TEST_CASE("results CSV") {
    test_util::TempDir dir;
    const auto path = dir.path() / "r.csv";
    write_results(path, {});
    CHECK(read_text_file(path) == std::string(kResultsHeader) + "\n");
    CHECK(read_results(path).empty());

    const std::vector<ResultRow> rows{{"exp", "cd", 7, 0, "avg_log_prob", -8.123456789012345},
                                      {"exp", "bgf", 18446744073709551615ULL, 1000, "kl", 1e-300},
                                      {"exp/var=0.1", "ml", 0, -1, "x", 0.1 + 0.2}};
    write_results(path, rows);
    CHECK(read_results(path) == rows);
    CHECK_THROWS_AS(format_results(std::vector<ResultRow>{{"a,b", "cd", 0, 0, "m", 1.0}}), std::invalid_argument);
    CHECK_THROWS(parse_results("wrong,header\n"));
}

TEST_CASE("model files") {
    Rng rng(5);
    RbmParams p = RbmParams::random(4, 3, 1.0, rng);
    p.visible_bias << 0.1, -0.2, 1e-17, 3.0;
    p.hidden_bias << -1.0 / 3.0, 2.0, 0.0;
    test_util::TempDir dir;
    write_model(dir.path() / "m.txt", p);
    CHECK(read_model(dir.path() / "m.txt") == p);
    CHECK_THROWS(parse_model("isingrbm-model 1\n2 2\n1 2\n"));
    CHECK_THROWS(parse_model("not a model"));
}

}  // TEST_SUITE
