#include "rflab/rng.hpp"

#include <cmath>
#include <numbers>
#include <vector>

namespace rflab {

namespace {
constexpr std::uint64_t kWeyl = 0x9E3779B97F4A7C15ULL;

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}
}  // namespace

std::uint64_t mix64(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

Rng Rng::derive(std::string_view tag, std::uint64_t index) const {
  std::uint64_t k = mix64(state_ ^ fnv1a(tag));
  k = mix64(k ^ (index * kWeyl + 1));
  return Rng(k);
}

std::uint64_t Rng::next_u64() {
  state_ += kWeyl;
  return mix64(state_);
}

double Rng::next_double() {
  return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double Rng::next_double_pos() {
  return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
}

std::uint64_t Rng::next_below(std::uint64_t n) {
  // Multiply-shift; bias is O(n / 2^64), irrelevant at these ranges.
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
}

double Rng::next_gaussian() {
  double u1 = next_double_pos();
  double u2 = next_double();
  return std::sqrt(-2.0 * std::log(u1)) *
         std::cos(2.0 * std::numbers::pi * u2);
}

void Rng::sample_without_replacement(std::uint64_t n, std::uint64_t k,
                                     std::uint32_t* out) {
  // Partial Fisher-Yates on a scratch index array.
  std::vector<std::uint32_t> idx(n);
  for (std::uint64_t i = 0; i < n; ++i) idx[i] = static_cast<std::uint32_t>(i);
  for (std::uint64_t i = 0; i < k; ++i) {
    std::uint64_t j = i + next_below(n - i);
    std::swap(idx[i], idx[j]);
    out[i] = idx[i];
  }
}

}  // namespace rflab
