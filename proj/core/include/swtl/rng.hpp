#pragma once

#include <cstdint>
#include <string_view>

namespace swtl {

/// Counter-based splittable RNG stream.
///
/// A stream is identified by a 64-bit key; draws walk a counter, so the
/// sequence depends only on (key, draw index).  Child streams are derived
/// by hashing (key, tag, indices) and never advance the parent, which makes
/// simulation output independent of the order in which streams are consumed.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : key_(seed), ctr_(0) {}

  std::uint64_t next_u64();

  /// Uniform on the open interval (0,1).
  double uniform();
  double uniform(double lo, double hi);

  /// Standard normal via inverse-CDF (one draw per variate).
  double normal();
  double normal(double mean, double sd);

  bool bernoulli(double p);

  /// Uniform integer on [lo, hi] inclusive.
  std::int64_t uniform_int(std::int64_t lo, std::int64_t hi);

  /// Child stream keyed by (this stream's key, tag, indices).
  Rng fork(std::string_view tag) const;
  Rng fork(std::string_view tag, std::uint64_t a) const;
  Rng fork(std::string_view tag, std::uint64_t a, std::uint64_t b) const;
  Rng fork(std::string_view tag, std::uint64_t a, std::uint64_t b, std::uint64_t c) const;

  std::uint64_t key() const { return key_; }

 private:
  std::uint64_t key_;
  std::uint64_t ctr_;
};

}  // namespace swtl
