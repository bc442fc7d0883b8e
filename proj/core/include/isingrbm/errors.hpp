#pragma once

#include <cstddef>
#include <stdexcept>
#include <string>

namespace isingrbm {

// Shape disagreement between a model and an argument.
class DimensionError : public std::invalid_argument {
public:
    DimensionError(const std::string& dimension, std::size_t expected, std::size_t actual);

    const std::string& dimension() const noexcept { return dimension_; }
    std::size_t expected() const noexcept { return expected_; }
    std::size_t actual() const noexcept { return actual_; }

private:
    std::string dimension_;
    std::size_t expected_;
    std::size_t actual_;
};

// An exact enumeration was requested for a model above the size limit.
class EnumerationGuardError : public std::length_error {
public:
    EnumerationGuardError(std::size_t units, std::size_t limit);
};

}  // namespace isingrbm
