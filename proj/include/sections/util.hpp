#pragma once

#include <cstdint>
#include <string>
#include <string_view>
#include <vector>

namespace sections {

// Deterministic strided subsample of {0, ..., n-1} with at most cap elements.
std::vector<std::uint32_t> strided_subset(std::size_t n, std::size_t cap);

// Geometric grid r_min * (r_max/r_min)^(i/(count-1)), i = 0..count-1.
std::vector<double> geometric_radii(double r_min, double r_max, int count);

// FNV-1a over bytes, used to name report directories by config content.
std::uint64_t fnv1a64(std::string_view bytes);
std::string hex16(std::uint64_t value);

// Shortest round-trip decimal form of a double (matches the JSON emitter).
std::string double_to_string(double value);

}  // namespace sections
