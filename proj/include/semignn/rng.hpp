#pragma once

#include <cstdint>

namespace semignn {

// splitmix64 step; also used to derive substream seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
  std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

// Mixes a tag into a seed, giving an independent derived seed. Chaining
// derive() calls yields named substreams, so every stochastic stage of a run
// replays bit-exactly from one root seed.
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) {
  std::uint64_t s = seed ^ (0x9e3779b97f4a7c15ULL + tag * 0xda942042e4dd58b5ULL);
  splitmix64(s);
  return splitmix64(s);
}

// xoshiro256** with splitmix64 seeding. No libstdc++ distributions anywhere:
// draws are hand-rolled so streams are identical across standard libraries.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) {
    std::uint64_t sm = seed;
    for (auto& w : s_) w = splitmix64(sm);
  }

  std::uint64_t next_u64() {
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

  // Uniform in [0, 1).
  double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

  // Uniform in [0, n); unbiased by rejection.
  std::uint32_t next_below(std::uint32_t n) {
    const std::uint64_t threshold = (~std::uint64_t{0}) - (~std::uint64_t{0}) % n;
    std::uint64_t x;
    do {
      x = next_u64();
    } while (x >= threshold);
    return static_cast<std::uint32_t>(x % n);
  }

  // Uniform in (lo, hi).
  double uniform(double lo, double hi) { return lo + (hi - lo) * next_double(); }

  Rng split(std::uint64_t tag) const {
    std::uint64_t base = s_[0] ^ rotl(s_[2], 13);
    return Rng(derive_seed(base, tag));
  }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t s_[4];
};

// Named substream of a root seed: Rng for stage `a`, item `b`, repeat `c`.
inline Rng substream(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0, std::uint64_t c = 0) {
  return Rng(derive_seed(derive_seed(derive_seed(seed, a), b), c));
}

// Stage tags for substreams, one per stochastic stage of a run.
namespace stream {
constexpr std::uint64_t kParamInit = 1;
constexpr std::uint64_t kWalks = 2;
constexpr std::uint64_t kShuffle = 3;
constexpr std::uint64_t kNegatives = 4;
constexpr std::uint64_t kSynth = 5;
}  // namespace stream

}  // namespace semignn
