#pragma once

// Self-contained PRNG stack. std::normal_distribution and friends are
// implementation-defined, which would make seeded runs differ across standard
// libraries; the generators here pin the exact bit stream.

#include <cmath>
#include <cstdint>

namespace rx {

// splitmix64: used to expand a user seed into generator state and to derive
// independent substream seeds.
class SplitMix64 {
public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
  }

private:
  std::uint64_t state_;
};

// Deterministic seed for substream `index` of a master seed (one substream
// per trajectory, one per noise channel, ...).
inline std::uint64_t substream_seed(std::uint64_t master, std::uint64_t index) {
  SplitMix64 sm(master ^ (0xD1B54A32D192ED03ULL * (index + 1)));
  (void)sm.next();
  return sm.next();
}

// xoshiro256++ by Blackman & Vigna (public domain reference implementation).
class Xoshiro256pp {
public:
  explicit Xoshiro256pp(std::uint64_t seed) {
    SplitMix64 sm(seed);
    for (auto& word : s_) word = sm.next();
  }

  std::uint64_t next() {
    const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
    const std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = rotl(s_[3], 45);
    return result;
  }

  // Uniform double in [0, 1) with 53 random bits.
  double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

private:
  static std::uint64_t rotl(std::uint64_t x, int k) {
    return (x << k) | (x >> (64 - k));
  }
  std::uint64_t s_[4];
};

// Standard normal stream via Box-Muller (pairs generated, one cached).
class GaussianStream {
public:
  explicit GaussianStream(std::uint64_t seed) : gen_(seed) {}

  double next() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    // u1 in (0, 1] so the log is finite.
    const double u1 = 1.0 - gen_.uniform01();
    const double u2 = gen_.uniform01();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 6.283185307179586476925286766559 * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
  }

private:
  Xoshiro256pp gen_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace rx
