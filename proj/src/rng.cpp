#include "pgkd/rng.hpp"

#include <cmath>

#include "pgkd/error.hpp"

namespace pgkd::rng {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

Counter::Counter(std::uint64_t seed, Stream stream, std::uint64_t salt) {
  std::uint64_t b = splitmix64(seed ^ static_cast<std::uint64_t>(stream));
  base_ = splitmix64(b ^ splitmix64(salt ^ 0x6C62272E07BB0142ull));
}

std::uint64_t Counter::bits(std::uint64_t i) const {
  return splitmix64(base_ + i * 0x9E3779B97F4A7C15ull);
}

double Counter::uniform(std::uint64_t i) const {
  return static_cast<double>(bits(i) >> 11) * 0x1.0p-53;
}

double Counter::normal(std::uint64_t i) const {
  // uniform(i) can be exactly 0; shift into (0,1).
  double u = (static_cast<double>(bits(i) >> 11) + 0.5) * 0x1.0p-53;
  return inverse_normal_cdf(u);
}

std::uint64_t Counter::below(std::uint64_t i, std::uint64_t bound) const {
  return static_cast<std::uint64_t>(
      (static_cast<unsigned __int128>(bits(i)) * bound) >> 64);
}

std::vector<int> shuffled_ids(int n, const Counter& c) {
  std::vector<int> ids(n);
  for (int i = 0; i < n; ++i) ids[i] = i;
  for (int i = n - 1; i > 0; --i) {
    auto j = static_cast<int>(c.below(static_cast<std::uint64_t>(i),
                                      static_cast<std::uint64_t>(i) + 1));
    std::swap(ids[i], ids[j]);
  }
  return ids;
}

// Acklam's inverse normal CDF approximation, |relative error| < 1.15e-9.
double inverse_normal_cdf(double p) {
  check(p > 0.0 && p < 1.0, ErrorKind::invalid_argument,
        "inverse_normal_cdf: p must lie in (0,1), got ", p);

  static const double a[] = {-3.969683028665376e+01, 2.209460984245205e+02,
                             -2.759285104469687e+02, 1.383577518672690e+02,
                             -3.066479806614716e+01, 2.506628277459239e+00};
  static const double b[] = {-5.447609879822406e+01, 1.615858368580409e+02,
                             -1.556989798598866e+02, 6.680131188771972e+01,
                             -1.328068155288572e+01};
  static const double c[] = {-7.784894002430293e-03, -3.223964580411365e-01,
                             -2.400758277161838e+00, -2.549732539343734e+00,
                             4.374664141464968e+00,  2.938163982698783e+00};
  static const double d[] = {7.784695709041462e-03, 3.224671290700398e-01,
                             2.445134137142996e+00, 3.754408661907416e+00};

  const double plow = 0.02425;
  const double phigh = 1 - plow;

  if (p < plow) {
    double q = std::sqrt(-2 * std::log(p));
    return (((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  if (p > phigh) {
    double q = std::sqrt(-2 * std::log(1 - p));
    return -(((((c[0] * q + c[1]) * q + c[2]) * q + c[3]) * q + c[4]) * q + c[5]) /
           ((((d[0] * q + d[1]) * q + d[2]) * q + d[3]) * q + 1);
  }
  double q = p - 0.5;
  double r = q * q;
  return (((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
         (((((b[0] * r + b[1]) * r + b[2]) * r + b[3]) * r + b[4]) * r + 1);
}

}  // namespace pgkd::rng
