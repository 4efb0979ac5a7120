#pragma once

#include <cstdint>
#include <string_view>

namespace memaudit::rng {

// Generator identity recorded in output metadata so results stay reproducible
// across implementations and platforms.
inline constexpr std::string_view kAlgorithm = "xoshiro256ss/splitmix64-seed v1";

struct SplitMix64 {
  std::uint64_t state;

  std::uint64_t next() {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }
};

class Xoshiro256ss {
public:
  explicit Xoshiro256ss(std::uint64_t seed) {
    SplitMix64 sm{seed};
    for (auto& w : s_) w = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform in [0, 1), 53-bit resolution.
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n). Multiply-shift mapping; the 2^-64 bias is
  // negligible for the population sizes handled here.
  std::uint64_t bounded(std::uint64_t n) {
    return static_cast<std::uint64_t>(
        (static_cast<unsigned __int128>(next()) * n) >> 64);
  }

  bool coin() { return (next() >> 63) != 0; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }

  std::uint64_t s_[4];
};

using Engine = Xoshiro256ss;

// Fixed replicate-to-seed mapping: replicate i draws from seed ^ i, so
// serial and parallel execution produce identical streams.
inline Engine replicate_engine(std::uint64_t seed, std::uint64_t index) {
  return Engine(seed ^ index);
}

}  // namespace memaudit::rng
