#include "isingrbm/data_io.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <iterator>
#include <sstream>

namespace isingrbm {

// ---------------------------------------------------------------- IDX

namespace {

constexpr std::uint8_t kIdxUnsignedByte = 0x08;
constexpr std::size_t kIdxMaxDims = 3;

std::string hex_byte(std::uint8_t b) {
    char buf[8];
    std::snprintf(buf, sizeof buf, "0x%02x", b);
    return buf;
}

}  // namespace

IdxFormatError::IdxFormatError(const std::string& what, std::size_t offset)
    : std::runtime_error("IDX format error at byte offset " + std::to_string(offset) + ": " + what),
      offset_(offset) {}

std::size_t IdxTensor::element_count() const noexcept {
    if (dims.empty()) return 0;
    std::size_t n = 1;
    for (auto d : dims) n *= d;
    return n;
}

void IdxTensor::validate() const {
    if (dims.empty() || dims.size() > kIdxMaxDims)
        throw std::invalid_argument("IDX tensor must have 1 to 3 dimensions, got " + std::to_string(dims.size()));
    if (elements.size() != element_count())
        throw std::invalid_argument("IDX tensor holds " + std::to_string(elements.size()) +
                                    " elements but its dimensions imply " + std::to_string(element_count()));
}

IdxTensor parse_idx(std::span<const std::uint8_t> bytes) {
    if (bytes.size() < 4) throw IdxTruncated("header needs 4 bytes, file has " + std::to_string(bytes.size()),
                                             bytes.size());
    if (bytes[0] != 0) throw IdxBadMagic("expected 0x00, found " + hex_byte(bytes[0]), 0);
    if (bytes[1] != 0) throw IdxBadMagic("expected 0x00, found " + hex_byte(bytes[1]), 1);
    if (bytes[2] != kIdxUnsignedByte)
        throw IdxUnsupportedType("type code " + hex_byte(bytes[2]) + " is not 0x08 (unsigned byte)", 2);
    const std::size_t rank = bytes[3];
    if (rank < 1 || rank > kIdxMaxDims)
        throw IdxFormatError("dimension count " + std::to_string(rank) + " is outside 1..3", 3);

    IdxTensor out;
    std::size_t offset = 4;
    for (std::size_t d = 0; d < rank; ++d) {
        if (bytes.size() < offset + 4)
            throw IdxTruncated("dimension " + std::to_string(d) + " size is cut short", bytes.size());
        const std::uint32_t size = (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
                                   (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
        out.dims.push_back(size);
        offset += 4;
    }
    const std::size_t payload = out.element_count();
    const std::size_t available = bytes.size() - offset;
    if (available < payload)
        throw IdxTruncated("payload needs " + std::to_string(payload) + " bytes, only " + std::to_string(available) +
                               " present",
                           bytes.size());
    if (available > payload)
        throw IdxTrailingData(std::to_string(available - payload) + " unexpected bytes after the payload",
                              offset + payload);
    out.elements.assign(bytes.begin() + static_cast<std::ptrdiff_t>(offset), bytes.end());
    return out;
}

IdxTensor read_idx(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open IDX file " + path.string());
    const std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
    return parse_idx(bytes);
}

std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor) {
    tensor.validate();
    std::vector<std::uint8_t> out = {0, 0, kIdxUnsignedByte, static_cast<std::uint8_t>(tensor.dims.size())};
    for (std::uint32_t d : tensor.dims)
        for (int shift = 24; shift >= 0; shift -= 8) out.push_back(static_cast<std::uint8_t>(d >> shift));
    out.insert(out.end(), tensor.elements.begin(), tensor.elements.end());
    return out;
}

void write_idx(const std::filesystem::path& path, const IdxTensor& tensor) {
    const auto bytes = encode_idx(tensor);
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write IDX file " + path.string());
    out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------- datasets

void BinaryDataset::validate() const {
    const std::size_t m = visible_size();
    for (std::size_t t = 0; t < samples.size(); ++t)
        if (samples[t].size() != m) throw DimensionError("dataset sample " + std::to_string(t), m, samples[t].size());
    if (!labels.empty() && labels.size() != samples.size())
        throw DimensionError("dataset labels", samples.size(), labels.size());
}

BinaryDataset binarize(const IdxTensor& images, BinarizeMode mode, double threshold, Rng& rng) {
    images.validate();
    const std::size_t count = images.dims.front();
    const std::size_t width = count == 0 ? 0 : images.element_count() / count;
    BinaryDataset out;
    out.source = mode == BinarizeMode::Threshold ? "idx:threshold" : "idx:stochastic";
    out.samples.reserve(count);
    for (std::size_t s = 0; s < count; ++s) {
        BitVector v(width);
        for (std::size_t p = 0; p < width; ++p) {
            const double level = images.elements[s * width + p] / 255.0;
            v.set(p, mode == BinarizeMode::Threshold ? level > threshold : rng.uniform() < level);
        }
        out.samples.push_back(std::move(v));
    }
    return out;
}

void attach_labels(BinaryDataset& data, const IdxTensor& labels) {
    labels.validate();
    if (labels.dims.size() != 1)
        throw std::invalid_argument("label file must be one-dimensional, got " + std::to_string(labels.dims.size()) +
                                    " dimensions");
    if (labels.elements.size() != data.samples.size())
        throw DimensionError("label count", data.samples.size(), labels.elements.size());
    data.labels.assign(labels.elements.begin(), labels.elements.end());
}

std::vector<double> empirical_distribution(std::span<const BitVector> samples, std::size_t visible) {
    if (visible >= 32) throw std::length_error("empirical table over " + std::to_string(visible) + " bits");
    if (samples.empty()) throw std::invalid_argument("empirical distribution of an empty sample set");
    std::vector<double> table(std::size_t{1} << visible, 0.0);
    for (const auto& v : samples) {
        if (v.size() != visible) throw DimensionError("sample length", visible, v.size());
        table[v.to_index()] += 1.0;
    }
    const double inv = 1.0 / static_cast<double>(samples.size());
    for (auto& x : table) x *= inv;
    return table;
}

std::vector<SyntheticSet> gen_synthetic(std::size_t n_distributions, std::size_t samples_per_dist,
                                        std::size_t visible, Rng& rng) {
    if (visible < 1) throw std::invalid_argument("synthetic sets need at least one visible unit");
    if (samples_per_dist < 1) throw std::invalid_argument("synthetic sets need at least one sample");
    std::vector<SyntheticSet> out;
    out.reserve(n_distributions);
    for (std::size_t d = 0; d < n_distributions; ++d) {
        SyntheticSet set;
        set.bit_probabilities.resize(visible);
        for (auto& p : set.bit_probabilities)
            p = kSyntheticMinProb + (kSyntheticMaxProb - kSyntheticMinProb) * rng.uniform();
        set.data.source = "synthetic:" + std::to_string(d);
        set.data.samples.reserve(samples_per_dist);
        for (std::size_t s = 0; s < samples_per_dist; ++s) {
            BitVector v(visible);
            for (std::size_t i = 0; i < visible; ++i) v.set(i, rng.uniform() < set.bit_probabilities[i]);
            set.data.samples.push_back(std::move(v));
        }
        set.table = empirical_distribution(set.data.samples, visible);
        out.push_back(std::move(set));
    }
    return out;
}

// ---------------------------------------------------------------- results CSV

std::string format_double(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

namespace {

void check_field(const std::string& field, const char* name) {
    if (field.find_first_of(",\n\r") != std::string::npos)
        throw std::invalid_argument(std::string("CSV field '") + name + "' contains a separator: " + field);
}

std::vector<std::string> split(const std::string& line, char sep) {
    std::vector<std::string> out;
    std::string cur;
    for (char c : line) {
        if (c == sep) {
            out.push_back(cur);
            cur.clear();
        } else {
            cur.push_back(c);
        }
    }
    out.push_back(cur);
    return out;
}

double parse_double(const std::string& s, const std::string& context) {
    char* end = nullptr;
    const double x = std::strtod(s.c_str(), &end);
    if (s.empty() || end != s.c_str() + s.size()) throw std::runtime_error("bad number '" + s + "' in " + context);
    return x;
}

template <typename Int>
Int parse_int(const std::string& s, const std::string& context) {
    Int x{};
    const auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), x);
    if (ec != std::errc{} || ptr != s.data() + s.size())
        throw std::runtime_error("bad integer '" + s + "' in " + context);
    return x;
}

}  // namespace

std::string format_results(std::span<const ResultRow> rows) {
    std::string out = kResultsHeader;
    out.push_back('\n');
    for (const auto& r : rows) {
        check_field(r.experiment, "experiment");
        check_field(r.algo, "algo");
        check_field(r.metric, "metric");
        out += r.experiment + ',' + r.algo + ',' + std::to_string(r.seed) + ',' + std::to_string(r.iteration) + ',' +
               r.metric + ',' + format_double(r.value) + '\n';
    }
    return out;
}

std::vector<ResultRow> parse_results(const std::string& text) {
    std::istringstream in(text);
    std::string line;
    if (!std::getline(in, line) || line != kResultsHeader)
        throw std::runtime_error("results CSV must start with header '" + std::string(kResultsHeader) + "'");
    std::vector<ResultRow> rows;
    std::size_t lineno = 1;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        const auto f = split(line, ',');
        const std::string ctx = "results line " + std::to_string(lineno);
        if (f.size() != 6) throw std::runtime_error(ctx + " has " + std::to_string(f.size()) + " fields, expected 6");
        rows.push_back({f[0], f[1], parse_int<std::uint64_t>(f[2], ctx), parse_int<std::int64_t>(f[3], ctx), f[4],
                        parse_double(f[5], ctx)});
    }
    return rows;
}

void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows) {
    write_text_file(path, format_results(rows));
}

std::vector<ResultRow> read_results(const std::filesystem::path& path) { return parse_results(read_text_file(path)); }

std::string read_text_file(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw std::runtime_error("cannot open " + path.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

void write_text_file(const std::filesystem::path& path, const std::string& text) {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write " + path.string());
    out << text;
    out.flush();
    if (!out) throw std::runtime_error("write failed for " + path.string());
}

// ---------------------------------------------------------------- model files

namespace {
constexpr const char* kModelMagic = "isingrbm-model 1";
}

std::string format_model(const RbmParams& params) {
    params.validate();
    std::string out = kModelMagic;
    out += '\n' + std::to_string(params.visible_size()) + ' ' + std::to_string(params.hidden_size()) + '\n';
    auto row = [&](auto&& values, Eigen::Index n) {
        for (Eigen::Index k = 0; k < n; ++k) {
            if (k) out.push_back(' ');
            out += format_double(values(k));
        }
        out.push_back('\n');
    };
    for (Eigen::Index i = 0; i < params.weights.rows(); ++i) row(params.weights.row(i), params.weights.cols());
    row(params.visible_bias, params.visible_bias.size());
    row(params.hidden_bias, params.hidden_bias.size());
    return out;
}

RbmParams parse_model(const std::string& text) {
    std::istringstream in(text);
    std::string magic;
    std::getline(in, magic);
    if (magic != kModelMagic) throw std::runtime_error("not a model file (missing '" + std::string(kModelMagic) + "')");
    std::size_t m = 0;
    std::size_t n = 0;
    if (!(in >> m >> n) || m == 0 || n == 0) throw std::runtime_error("model file has no valid size line");
    RbmParams p = RbmParams::zeros(m, n);
    auto read = [&](double& x) {
        std::string tok;
        if (!(in >> tok)) throw std::runtime_error("model file is truncated");
        x = parse_double(tok, "model file");
    };
    for (Eigen::Index i = 0; i < p.weights.rows(); ++i)
        for (Eigen::Index j = 0; j < p.weights.cols(); ++j) read(p.weights(i, j));
    for (auto& x : p.visible_bias) read(x);
    for (auto& x : p.hidden_bias) read(x);
    p.validate();
    return p;
}

void write_model(const std::filesystem::path& path, const RbmParams& params) {
    write_text_file(path, format_model(params));
}

RbmParams read_model(const std::filesystem::path& path) { return parse_model(read_text_file(path)); }

}  // namespace isingrbm
