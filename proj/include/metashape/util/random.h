#ifndef METASHAPE_UTIL_RANDOM_H_
#define METASHAPE_UTIL_RANDOM_H_

#include <cstdint>
#include <string_view>

namespace metashape {

// 64-bit FNV-1a. Stable across platforms, used for seeding and content
// fingerprints.
constexpr uint64_t kFnvOffset = 0xcbf29ce484222325ULL;

inline uint64_t Fnv1a(std::string_view bytes, uint64_t h = kFnvOffset) {
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

inline uint64_t SplitMix64(uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

// Mixes a sequence of keys into a single stream seed.
inline uint64_t MixSeed(uint64_t seed) { return SplitMix64(seed); }

template <typename... Rest>
uint64_t MixSeed(uint64_t seed, uint64_t next, Rest... rest) {
  return MixSeed(SplitMix64(seed) ^ next, rest...);
}

template <typename... Rest>
uint64_t MixSeed(uint64_t seed, std::string_view next, Rest... rest) {
  return MixSeed(SplitMix64(seed) ^ Fnv1a(next), rest...);
}

// Small deterministic generator (splitmix64 stream). Its output sequence is
// fixed by the seed on every platform, unlike the std distributions.
class Rng {
 public:
  explicit Rng(uint64_t seed) : state_(seed) {}

  uint64_t Next() {
    state_ += 0x9e3779b97f4a7c15ULL;
    uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
  }

  // Uniform in [0, 1) with 53 random bits.
  double Uniform() { return static_cast<double>(Next() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, bound) without modulo bias. bound must be > 0.
  uint64_t Below(uint64_t bound) {
    const uint64_t limit = -bound % bound;
    uint64_t x;
    do {
      x = Next();
    } while (x < limit);
    return x % bound;
  }

  bool Bernoulli(double p) { return Uniform() < p; }

 private:
  uint64_t state_;
};

}  // namespace metashape

#endif  // METASHAPE_UTIL_RANDOM_H_
