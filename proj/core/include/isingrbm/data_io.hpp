#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "isingrbm/rbm.hpp"
#include "isingrbm/rng.hpp"

namespace isingrbm {

// ---------------------------------------------------------------- IDX

// Unsigned-byte IDX tensor, row-major.
struct IdxTensor {
    std::vector<std::uint32_t> dims;
    std::vector<std::uint8_t> elements;

    std::size_t element_count() const noexcept;
    void validate() const;
    bool operator==(const IdxTensor&) const = default;
};

class IdxFormatError : public std::runtime_error {
public:
    IdxFormatError(const std::string& what, std::size_t offset);
    std::size_t offset() const noexcept { return offset_; }

private:
    std::size_t offset_;
};

class IdxBadMagic : public IdxFormatError {
    using IdxFormatError::IdxFormatError;
};
class IdxUnsupportedType : public IdxFormatError {
    using IdxFormatError::IdxFormatError;
};
class IdxTruncated : public IdxFormatError {
    using IdxFormatError::IdxFormatError;
};
class IdxTrailingData : public IdxFormatError {
    using IdxFormatError::IdxFormatError;
};

IdxTensor parse_idx(std::span<const std::uint8_t> bytes);
IdxTensor read_idx(const std::filesystem::path& path);
std::vector<std::uint8_t> encode_idx(const IdxTensor& tensor);
void write_idx(const std::filesystem::path& path, const IdxTensor& tensor);

// ---------------------------------------------------------------- datasets

struct BinaryDataset {
    std::vector<BitVector> samples;
    std::vector<int> labels;  // empty when unlabeled
    std::string source;

    std::size_t size() const noexcept { return samples.size(); }
    std::size_t visible_size() const noexcept { return samples.empty() ? 0 : samples.front().size(); }
    void validate() const;
};

enum class BinarizeMode { Threshold, Stochastic };

// Each leading-dimension slice becomes one sample. Threshold: bit = pixel/255
// > threshold. Stochastic: bit ~ Bernoulli(pixel/255).
BinaryDataset binarize(const IdxTensor& images, BinarizeMode mode, double threshold, Rng& rng);

// Labels from a 1-D IDX tensor; length must match the dataset.
void attach_labels(BinaryDataset& data, const IdxTensor& labels);

// Empirical distribution over 2^visible configurations, indexed by
// BitVector::to_index().
std::vector<double> empirical_distribution(std::span<const BitVector> samples, std::size_t visible);

struct SyntheticSet {
    BinaryDataset data;
    std::vector<double> bit_probabilities;  // generating product-of-Bernoulli
    std::vector<double> table;              // empirical distribution of `data`
};

inline constexpr double kSyntheticMinProb = 0.1;
inline constexpr double kSyntheticMaxProb = 0.9;

// Training distributions for the bias benchmark: each set samples
// `samples_per_dist` vectors from a product of Bernoullis with per-bit
// probabilities uniform in [0.1, 0.9].
std::vector<SyntheticSet> gen_synthetic(std::size_t n_distributions, std::size_t samples_per_dist,
                                        std::size_t visible, Rng& rng);

// ---------------------------------------------------------------- results CSV

struct ResultRow {
    std::string experiment;
    std::string algo;
    std::uint64_t seed = 0;
    std::int64_t iteration = 0;
    std::string metric;
    double value = 0.0;

    bool operator==(const ResultRow&) const = default;
};

inline constexpr const char* kResultsHeader = "experiment,algo,seed,iteration,metric,value";

// 17 significant digits; fields must not contain commas or newlines.
std::string format_results(std::span<const ResultRow> rows);
std::vector<ResultRow> parse_results(const std::string& text);
void write_results(const std::filesystem::path& path, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results(const std::filesystem::path& path);

std::string format_double(double x);

// ---------------------------------------------------------------- model files

std::string format_model(const RbmParams& params);
RbmParams parse_model(const std::string& text);
void write_model(const std::filesystem::path& path, const RbmParams& params);
RbmParams read_model(const std::filesystem::path& path);

std::string read_text_file(const std::filesystem::path& path);
void write_text_file(const std::filesystem::path& path, const std::string& text);

}  // namespace isingrbm
