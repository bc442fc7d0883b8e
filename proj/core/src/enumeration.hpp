#pragma once

#include <algorithm>
#include <cstdint>

#include <Eigen/Dense>

namespace isingrbm::detail {

inline constexpr std::size_t kEnumerationBlockBits = 12;

// Calls fn(block, first_code) for consecutive blocks of visible
// configurations; row r of `block` is the configuration with index
// first_code + r, bit i of the index giving column i.
inline void fill_visible_block(Eigen::MatrixXd& block, std::uint64_t first) {
    for (Eigen::Index r = 0; r < block.rows(); ++r) {
        const std::uint64_t code = first + static_cast<std::uint64_t>(r);
        for (Eigen::Index i = 0; i < block.cols(); ++i) block(r, i) = static_cast<double>((code >> i) & 1U);
    }
}

// Calls fn(block, first_code) for consecutive blocks of visible
// configurations; row r of `block` is the configuration with index
// first_code + r, bit i of the index giving column i.
template <typename Fn>
void for_each_visible_block(std::size_t visible, Fn&& fn) {
    const std::uint64_t total = std::uint64_t{1} << visible;
    const std::uint64_t block_rows = std::min<std::uint64_t>(total, std::uint64_t{1} << kEnumerationBlockBits);
    if (total == block_rows) {
        // Small models fit in one block, which is reused across calls.
        thread_local Eigen::MatrixXd cached;
        if (cached.rows() != static_cast<Eigen::Index>(total) || cached.cols() != static_cast<Eigen::Index>(visible)) {
            cached.resize(static_cast<Eigen::Index>(total), static_cast<Eigen::Index>(visible));
            fill_visible_block(cached, 0);
        }
        fn(static_cast<const Eigen::MatrixXd&>(cached), std::uint64_t{0});
        return;
    }
    Eigen::MatrixXd block(static_cast<Eigen::Index>(block_rows), static_cast<Eigen::Index>(visible));
    for (std::uint64_t first = 0; first < total; first += block_rows) {
        fill_visible_block(block, first);
        fn(static_cast<const Eigen::MatrixXd&>(block), first);
    }
}

// Numerically stable log(1 + e^x), element-wise.
inline Eigen::ArrayXXd softplus_array(const Eigen::ArrayXXd& x) {
    return x.max(0.0) + (-x.abs()).exp().log1p();
}

}  // namespace isingrbm::detail
