#pragma once

#include <cstdint>

namespace aerial {

/// Counter-based random stream. Output depends only on (key, counter), so
/// identical seeds give identical draw sequences on every platform, and
/// derive() splits off statistically independent child streams without
/// sharing state. Single-owner: one stream per episode/worker.
class RngStream {
 public:
  RngStream() : RngStream(0) {}
  explicit RngStream(std::uint64_t seed) : key_(mix(seed ^ 0x6a09e667f3bcc908ULL)) {}

  /// Child stream fully determined by (parent key, tag). Same tag twice
  /// gives the same child; callers pick distinct tags.
  RngStream derive(std::uint64_t tag) const {
    RngStream child;
    child.key_ = mix(key_ ^ mix(tag ^ 0xbb67ae8584caa73bULL));
    child.counter_ = 0;
    return child;
  }

  std::uint64_t next_u64() { return mix(key_ + 0x9e3779b97f4a7c15ULL * ++counter_); }

  /// Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  /// Uniform integer in [0, n). n must be >= 1.
  int uniform_int(int n) {
    return static_cast<int>((static_cast<unsigned __int128>(next_u64()) *
                             static_cast<unsigned __int128>(n)) >> 64);
  }

  bool bernoulli(double p) { return uniform() < p; }

  std::uint64_t key() const { return key_; }
  std::uint64_t counter() const { return counter_; }

 private:
  static std::uint64_t mix(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
  }

  std::uint64_t key_ = 0;
  std::uint64_t counter_ = 0;
};

}  // namespace aerial
