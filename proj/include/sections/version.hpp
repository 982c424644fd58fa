#pragma once

namespace sections {

inline constexpr const char* kVersion = "0.1.0";

// Seeded generation contract: mt19937_64, one draw per base in ascending
// base-id order, uniforms from the top 53 bits. Bumping this string is the
// only sanctioned way to change the stream.
inline constexpr const char* kRngVersion = "mt19937_64-v1";

}  // namespace sections
