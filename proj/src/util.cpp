#include "sections/util.hpp"

#include <charconv>
#include <cmath>

#include "sections/errors.hpp"

namespace sections {

std::vector<std::uint32_t> strided_subset(std::size_t n, std::size_t cap) {
  std::vector<std::uint32_t> out;
  if (n == 0 || cap == 0) return out;
  if (n <= cap) {
    out.resize(n);
    for (std::size_t i = 0; i < n; ++i) out[i] = static_cast<std::uint32_t>(i);
    return out;
  }
  const std::size_t stride = (n + cap - 1) / cap;
  for (std::size_t i = 0; i < n; i += stride) out.push_back(static_cast<std::uint32_t>(i));
  return out;
}

std::vector<double> geometric_radii(double r_min, double r_max, int count) {
  if (!(r_min > 0) || !(r_max > r_min) || count < 2)
    throw PreconditionError("geometric radius grid needs 0 < r_min < r_max and count >= 2");
  std::vector<double> out(count);
  const double ratio = r_max / r_min;
  for (int i = 0; i < count; ++i)
    out[i] = r_min * std::pow(ratio, static_cast<double>(i) / (count - 1));
  out.back() = r_max;
  return out;
}

std::uint64_t fnv1a64(std::string_view bytes) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

std::string hex16(std::uint64_t value) {
  static const char* digits = "0123456789abcdef";
  std::string out(16, '0');
  for (int i = 15; i >= 0; --i) {
    out[i] = digits[value & 0xf];
    value >>= 4;
  }
  return out;
}

std::string double_to_string(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace sections
