#include "swtl/rng.hpp"

#include <cmath>

#include "swtl/stats.hpp"

namespace swtl {

namespace {

constexpr std::uint64_t kGolden = 0x9E3779B97F4A7C15ULL;

// splitmix64 finalizer
inline std::uint64_t mix64(std::uint64_t z) {
  z += kGolden;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

inline std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (char c : s) {
    h ^= static_cast<std::uint8_t>(c);
    h *= 0x100000001B3ULL;
  }
  return h;
}

}  // namespace

std::uint64_t Rng::next_u64() { return mix64(key_ + (++ctr_) * kGolden); }

double Rng::uniform() {
  // 53 mantissa bits, offset by half an ulp so the result is in (0,1)
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Rng::uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

double Rng::normal() { return norm_quantile(uniform()); }

double Rng::normal(double mean, double sd) { return mean + sd * normal(); }

bool Rng::bernoulli(double p) { return uniform() < p; }

std::int64_t Rng::uniform_int(std::int64_t lo, std::int64_t hi) {
  const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
  // multiply-shift bounded draw; bias is < 2^-64 * span, negligible here
  const unsigned __int128 m = static_cast<unsigned __int128>(next_u64()) * span;
  return lo + static_cast<std::int64_t>(m >> 64);
}

Rng Rng::fork(std::string_view tag) const { return Rng(mix64(key_ ^ fnv1a(tag))); }

Rng Rng::fork(std::string_view tag, std::uint64_t a) const {
  return Rng(mix64(mix64(key_ ^ fnv1a(tag)) ^ a));
}

Rng Rng::fork(std::string_view tag, std::uint64_t a, std::uint64_t b) const {
  return Rng(mix64(mix64(mix64(key_ ^ fnv1a(tag)) ^ a) ^ b));
}

Rng Rng::fork(std::string_view tag, std::uint64_t a, std::uint64_t b, std::uint64_t c) const {
  return Rng(mix64(mix64(mix64(mix64(key_ ^ fnv1a(tag)) ^ a) ^ b) ^ c));
}

}  // namespace swtl
