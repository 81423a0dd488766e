#pragma once

#include <cstdint>
#include <vector>

namespace pgkd::rng {

// Counter-based generator built on the splitmix64 mixing function.
// A draw is addressed by (seed, stream, salt, counter); there is no hidden
// state, so independent consumers never perturb each other and any draw can
// be reproduced in isolation. All integer arithmetic, identical on every
// platform.
enum class Stream : std::uint64_t {
  split = 0xA1B2C3D4E5F60711ull,
  init = 0xBEEF5EED0D15EA5Eull,
  noise = 0x90155E00C0FFEE42ull,
  sbm = 0x5B3BB10CC0DE2025ull,
  dropout = 0xD120F0E1D2C3B4A5ull,
};

std::uint64_t splitmix64(std::uint64_t x);

class Counter {
 public:
  Counter(std::uint64_t seed, Stream stream, std::uint64_t salt = 0);

  std::uint64_t bits(std::uint64_t i) const;
  // Uniform in [0, 1), 53 mantissa bits.
  double uniform(std::uint64_t i) const;
  // Standard normal via the inverse CDF (Acklam's rational approximation).
  double normal(std::uint64_t i) const;
  // Uniform integer in [0, bound) via 128-bit multiply-shift.
  std::uint64_t below(std::uint64_t i, std::uint64_t bound) const;

 private:
  std::uint64_t base_;
};

// Stateful convenience wrapper over a Counter.
class Sequence {
 public:
  Sequence(std::uint64_t seed, Stream stream, std::uint64_t salt = 0)
      : c_(seed, stream, salt) {}
  std::uint64_t next_bits() { return c_.bits(i_++); }
  double next_uniform() { return c_.uniform(i_++); }
  double next_normal() { return c_.normal(i_++); }
  std::uint64_t next_below(std::uint64_t bound) { return c_.below(i_++, bound); }

 private:
  Counter c_;
  std::uint64_t i_ = 0;
};

// Fisher-Yates shuffle of 0..n-1 driven by the given counter stream.
std::vector<int> shuffled_ids(int n, const Counter& c);

double inverse_normal_cdf(double p);

}  // namespace pgkd::rng
