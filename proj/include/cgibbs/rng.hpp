#pragma once
// Self-contained RNG: xoshiro256++ streams with splitmix64 seeding.
// All continuous draws go through explicit inverse-CDF / rejection code so that
// output is byte-identical across platforms and thread counts, and so that
// stream consumption is well-defined for common-random-number couplings
// (one uniform per normal draw).

#include <cstdint>
#include <cmath>
#include <stdexcept>

namespace cgibbs {

double norm_quantile(double p); // special.cpp

inline std::uint64_t splitmix64(std::uint64_t& s) {
  std::uint64_t z = (s += 0x9e3779b97f4a7c15ULL);
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
  return z ^ (z >> 31);
}

class Rng {
 public:
  explicit Rng(std::uint64_t seed = 0x853c49e6748fea9bULL) { reseed(seed); }

  // labeled child stream: (base seed, replicate id, role) -> independent stream
  static Rng stream(std::uint64_t base, std::uint64_t replicate, std::uint64_t role) {
    std::uint64_t s = base;
    s ^= 0x632be59bd9b4e019ULL + splitmix64(s);
    s ^= replicate * 0xff51afd7ed558ccdULL + 0x9e3779b97f4a7c15ULL;
    s = s ^ (s >> 33);
    s += role * 0xc4ceb9fe1a85ec53ULL;
    Rng r;
    r.reseed(splitmix64(s));
    return r;
  }

  void reseed(std::uint64_t seed) {
    std::uint64_t s = seed;
    for (int i = 0; i < 4; ++i) st_[i] = splitmix64(s);
    if ((st_[0] | st_[1] | st_[2] | st_[3]) == 0) st_[0] = 1; // all-zero state is invalid
  }

  std::uint64_t next_u64() {
    const std::uint64_t result = rotl(st_[0] + st_[3], 23) + st_[0];
    const std::uint64_t t = st_[1] << 17;
    st_[2] ^= st_[0];
    st_[3] ^= st_[1];
    st_[1] ^= st_[2];
    st_[0] ^= st_[3];
    st_[2] ^= t;
    st_[3] = rotl(st_[3], 45);
    return result;
  }

  // uniform on the open interval (0,1); 52-bit resolution, never 0 or 1
  double runif() { return (double)((next_u64() >> 12) + 0.5) * 0x1.0p-52; }

  double rnorm() { return norm_quantile(runif()); }

  double rexp() { return -std::log(runif()); }

  // Laplace(0, scale b): inverse CDF through one uniform
  double rlaplace(double b) {
    double u = runif() - 0.5;
    return (u < 0 ? b * std::log1p(2.0 * u) : -b * std::log1p(-2.0 * u));
  }

  // Gamma(shape, scale 1), Marsaglia-Tsang; shape < 1 boosted via U^(1/shape)
  double rgamma(double shape) {
    if (!(shape > 0)) throw std::invalid_argument("rgamma: shape must be positive");
    if (shape < 1.0) {
      double g = rgamma(shape + 1.0);
      return g * std::pow(runif(), 1.0 / shape);
    }
    const double d = shape - 1.0 / 3.0;
    const double c = 1.0 / std::sqrt(9.0 * d);
    for (;;) {
      double x = rnorm();
      double v = 1.0 + c * x;
      if (v <= 0.0) continue;
      v = v * v * v;
      double u = runif();
      double x2 = x * x;
      if (u < 1.0 - 0.0331 * x2 * x2) return d * v;
      if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v;
    }
  }

  double rgamma(double shape, double scale) { return scale * rgamma(shape); }

 private:
  static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
  std::uint64_t st_[4];
};

} // namespace cgibbs
