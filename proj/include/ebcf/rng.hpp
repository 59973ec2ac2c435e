#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace ebcf {

namespace detail {

// SplitMix64 finalizer (Steele, Lea & Flood's avalanche function).
constexpr std::uint64_t avalanche64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ull;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebull;
  z ^= z >> 31;
  return z;
}

}  // namespace detail

/// Counter-based 64-bit generator (SplitMix64 run in counter mode):
/// output i is avalanche(key + i * golden gamma). Substreams derive a
/// fresh key from (key, tag), so draws for unit i of replicate r can be
/// reproduced without generating anything else first. Copyable value type.
class CounterRng {
 public:
  explicit CounterRng(std::uint64_t seed)
      : key_(detail::avalanche64(seed + kGolden)) {}

  /// Independent stream keyed by (this stream, tag).
  CounterRng substream(std::uint64_t tag) const {
    CounterRng r(*this);
    r.key_ = detail::avalanche64(key_ ^ detail::avalanche64(tag * kGolden + 0x632be59bd9b4e019ull));
    r.counter_ = 0;
    r.has_cached_normal_ = false;
    return r;
  }

  CounterRng substream(std::uint64_t a, std::uint64_t b) const {
    return substream(a).substream(b);
  }

  std::uint64_t next_u64() { return detail::avalanche64(key_ + (++counter_) * kGolden); }

  /// Uniform on [0, 1).
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform on (0, 1]; safe under log().
  double uniform_pos() { return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the paired deviate is cached so the
  /// draw count stays deterministic (no rejection step).
  double normal() {
    if (has_cached_normal_) {
      has_cached_normal_ = false;
      return cached_normal_;
    }
    const double r = std::sqrt(-2.0 * std::log(uniform_pos()));
    const double theta = 2.0 * std::numbers::pi * uniform();
    cached_normal_ = r * std::sin(theta);
    has_cached_normal_ = true;
    return r * std::cos(theta);
  }

  /// Uniform integer in [0, n), n >= 1. Fixed-point multiply; the bias is
  /// bounded by n / 2^64 which is negligible at the sizes used here.
  std::uint64_t below(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
  }

 private:
  static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ull;

  CounterRng() : key_(0) {}

  std::uint64_t key_;
  std::uint64_t counter_ = 0;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

/// One-shot seed derivation for nested components (e.g. per-replicate data
/// streams): a deterministic function of (seed, a, b).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0) {
  return CounterRng(seed).substream(a, b).next_u64();
}

}  // namespace ebcf
