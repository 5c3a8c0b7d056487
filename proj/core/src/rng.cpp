#include "pqpf/rng.hpp"

#include <cmath>

namespace pqpf {

std::uint64_t SplitMix64::next() {
  std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ULL);
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
  return z ^ (z >> 31);
}

double SplitMix64::uniform() {
  // 53 random bits; shift into (0,1) by offsetting half an ulp
  return (double(next() >> 11) + 0.5) * 0x1.0p-53;
}

double SplitMix64::uniform(double a, double b) { return a + (b - a) * uniform(); }

double SplitMix64::normal() {
  double u1 = uniform();
  double u2 = uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * M_PI * u2);
}

double SplitMix64::gamma(double shape, double scale) {
  if (shape < 1.0) {
    double u = uniform();
    return gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  double d = shape - 1.0 / 3.0;
  double c = 1.0 / std::sqrt(9.0 * d);
  for (;;) {
    double x = normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    double u = uniform();
    if (u < 1.0 - 0.0331 * x * x * x * x) return d * v * scale;
    if (std::log(u) < 0.5 * x * x + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

std::uint64_t fnv1a64(std::string_view s) {
  std::uint64_t h = 0xCBF29CE484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001B3ULL;
  }
  return h;
}

std::uint64_t derive_seed(std::uint64_t master, std::string_view site_id,
                          std::int64_t date_ordinal, std::uint64_t salt) {
  SplitMix64 mix(master ^ fnv1a64(site_id));
  mix.next();
  SplitMix64 mix2(mix.next() ^ (std::uint64_t(date_ordinal) * 0x9E3779B97F4A7C15ULL) ^ salt);
  return mix2.next();
}

}  // namespace pqpf
