#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

#include "lorabandit/errors.hpp"

namespace lorabandit {

// splitmix64 finalizer; bijective on 64-bit ints.
inline std::uint64_t mix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ull;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ull;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebull;
  return x ^ (x >> 31);
}

// Independent per-device random streams. Deriving each stream from
// (master, device, stream) means adding devices to a fleet never perturbs
// the draws of the devices that were already there.
enum class Stream : std::uint64_t {
  Placement = 1,
  Traffic = 2,
  Policy = 3,
  Shadowing = 4,
};

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t device_id,
                                 Stream stream) {
  return mix64(mix64(master) ^ mix64(device_id * 0x9e3779b97f4a7c15ull ^
                                     static_cast<std::uint64_t>(stream)));
}

// mt19937_64 with hand-rolled output distributions. The std:: distribution
// classes are implementation-defined, so using them would tie artifact
// byte-reproducibility to one standard library version.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  // Uniform double in [0, 1), 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  // Uniform integer in [0, n).
  int below(int n) {
    if (n <= 0) throw ConfigError("Rng::below requires n >= 1");
    int k = static_cast<int>(uniform() * n);
    return k < n ? k : n - 1;
  }

  // Exponential with the given mean, by inversion.
  double exponential(double mean) {
    if (!(mean > 0.0)) throw ConfigError("exponential mean must be positive");
    return -mean * std::log(1.0 - uniform());
  }

  // Normal(0, sigma) via Box-Muller; draws exactly two uniforms per call.
  double normal(double sigma) {
    double u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(1.0 - u1));
    return sigma * r * std::cos(2.0 * std::numbers::pi * u2);
  }

  std::uint64_t raw() { return engine_(); }

 private:
  std::mt19937_64 engine_;
};

}  // namespace lorabandit
