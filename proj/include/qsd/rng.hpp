#pragma once

#include <cmath>
#include <cstdint>
#include <random>
#include <sstream>

namespace qsd {

// Deterministic random stream. mt19937_64 output is fully specified by the
// standard; all variate transforms below are explicit so that a fixed seed
// yields the identical sequence on every platform (std::*_distribution is
// implementation-defined and deliberately avoided).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : eng_(seed) {}

  std::uint64_t next_u64() { return eng_(); }

  // Uniform on [0,1) with 53 significant bits.
  double uniform() {
    return static_cast<double>(eng_() >> 11) * 0x1.0p-53;
  }

  // Uniform on (0,1), both endpoints excluded; safe under log().
  double uniform_open() {
    return (static_cast<double>(eng_() >> 11) + 0.5) * 0x1.0p-53;
  }

  // Standard normal via the Box-Muller cosine branch. Consumes exactly two
  // engine outputs per call; no cached spare, so the draw count is obvious.
  double normal() {
    const double u1 = uniform_open();
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(6.283185307179586476925286766559 * u2);
  }

  // Exp(1).
  double exponential() { return -std::log(uniform_open()); }

  // FNV-1a hash of the serialized engine state; snapshot fingerprint.
  std::uint64_t state_digest() const {
    std::ostringstream os;
    os << eng_;
    std::uint64_t h = 1469598103934665603ull;
    for (const char c : os.str()) {
      h ^= static_cast<unsigned char>(c);
      h *= 1099511628211ull;
    }
    return h;
  }

 private:
  std::mt19937_64 eng_;
};

}  // namespace qsd
