#pragma once

// Counter-based random numbers (Philox4x32-10). A stream is identified by
// (seed, sample index, purpose tag); draws are addressed by a block counter,
// so any sample can be regenerated independently of the others.

#include <array>
#include <cmath>
#include <cstdint>
#include <numbers>

namespace homoglab {

enum class Purpose : std::uint32_t {
  GaussianNoise = 1,
  PoissonPoints = 2,
  SeedDerivation = 3,
  Bootstrap = 4,
  Test = 5,
};

using PhiloxBlock = std::array<std::uint32_t, 4>;
using PhiloxKey = std::array<std::uint32_t, 2>;

inline PhiloxBlock philox4x32_10(PhiloxBlock ctr, PhiloxKey key) {
  constexpr std::uint32_t M0 = 0xD2511F53u, M1 = 0xCD9E8D57u;
  constexpr std::uint32_t W0 = 0x9E3779B9u, W1 = 0xBB67AE85u;
  for (int round = 0; round < 10; ++round) {
    const std::uint64_t p0 = static_cast<std::uint64_t>(M0) * ctr[0];
    const std::uint64_t p1 = static_cast<std::uint64_t>(M1) * ctr[2];
    const std::uint32_t hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
    const std::uint32_t hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
    ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    key[0] += W0;
    key[1] += W1;
  }
  return ctr;
}

class PhiloxStream {
 public:
  PhiloxStream(std::uint64_t seed, std::uint32_t sample, Purpose purpose)
      : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
        sample_(sample),
        purpose_(static_cast<std::uint32_t>(purpose)) {}

  std::uint32_t next_u32() {
    if (pos_ == 4) refill();
    return buf_[pos_++];
  }

  std::uint64_t next_u64() {
    const std::uint64_t hi = next_u32();
    return (hi << 32) | next_u32();
  }

  /// Uniform on the open interval (0, 1) with 53 random bits.
  double uniform() { return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53; }

  /// Standard normal by Box-Muller; the second variate is cached.
  double normal() {
    if (has_spare_) {
      has_spare_ = false;
      return spare_;
    }
    const double u1 = uniform();
    const double u2 = uniform();
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double th = 2.0 * std::numbers::pi * u2;
    spare_ = rad * std::sin(th);
    has_spare_ = true;
    return rad * std::cos(th);
  }

  double exponential() { return -std::log(uniform()); }

  /// Poisson count as the number of unit-rate arrivals before time mean.
  std::uint64_t poisson(double mean) {
    std::uint64_t n = 0;
    double t = exponential();
    while (t < mean) {
      ++n;
      t += exponential();
    }
    return n;
  }

 private:
  void refill() {
    buf_ = philox4x32_10({static_cast<std::uint32_t>(block_), static_cast<std::uint32_t>(block_ >> 32), sample_, purpose_}, key_);
    ++block_;
    pos_ = 0;
  }

  PhiloxKey key_;
  std::uint32_t sample_;
  std::uint32_t purpose_;
  std::uint64_t block_ = 0;
  PhiloxBlock buf_{};
  int pos_ = 4;
  double spare_ = 0.0;
  bool has_spare_ = false;
};

/// Seed for sample s of a campaign, derived from the master seed.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint32_t sample) {
  return PhiloxStream(master, sample, Purpose::SeedDerivation).next_u64();
}

}  // namespace homoglab
