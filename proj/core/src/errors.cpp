#include "isingrbm/errors.hpp"

namespace isingrbm {

DimensionError::DimensionError(const std::string& dimension, std::size_t expected, std::size_t actual)
    : std::invalid_argument("dimension mismatch in " + dimension + ": expected " + std::to_string(expected) +
                            ", got " + std::to_string(actual)),
      dimension_(dimension),
      expected_(expected),
      actual_(actual) {}

EnumerationGuardError::EnumerationGuardError(std::size_t units, std::size_t limit)
    : std::length_error("exact enumeration over " + std::to_string(units) + " units exceeds the limit of " +
                        std::to_string(limit)) {}

}  // namespace isingrbm
