#pragma once

#include <cstdint>
#include <string_view>

namespace pqpf {

// SplitMix64 is the toolkit's named generator.  Output is reproducible
// across platforms (no reliance on std::*_distribution), which keeps
// randomized verification steps byte-identical for a fixed seed.
class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next();

  // uniform on (0, 1)
  double uniform();
  double uniform(double a, double b);

  // standard normal via Box-Muller (two uniforms per draw)
  double normal();

  // Gamma(shape, scale) by Marsaglia-Tsang, with the shape<1 boost
  double gamma(double shape, double scale);

 private:
  std::uint64_t state_;
};

std::uint64_t fnv1a64(std::string_view s);

// Per-case stream derivation from (master seed, site id, date ordinal, salt):
// parallel evaluation order cannot change any randomized result.
std::uint64_t derive_seed(std::uint64_t master, std::string_view site_id,
                          std::int64_t date_ordinal, std::uint64_t salt = 0);

inline const char* rng_name() { return "splitmix64"; }

}  // namespace pqpf
