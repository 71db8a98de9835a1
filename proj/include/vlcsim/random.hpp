#pragma once

// Seeded pseudo-random streams. std::mt19937_64 is bit-exact by the standard;
// the Gaussian transform is done here because std::normal_distribution is
// implementation-defined and would break cross-platform reproducibility.

#include <cmath>
#include <cstdint>
#include <numbers>
#include <optional>
#include <random>

namespace vlcsim {

inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

/// Stream purpose, mixed into substream seeds so that e.g. mobility draws
/// never shift the noise sequence.
enum class StreamSalt : std::uint64_t { Noise = 0x6e6f697365ULL, Mobility = 0x6d6f6269ULL };

class Rng {
public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  /// Independent substream for (seed, device, purpose).
  static Rng substream(std::uint64_t seed, std::uint64_t device_id, StreamSalt salt) {
    return Rng(splitmix64(seed ^ splitmix64(device_id ^ splitmix64(static_cast<std::uint64_t>(salt)))));
  }

  /// Uniform in [0, 1) with 53 random bits.
  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

  /// Standard normal via Box-Muller; the second variate of each pair is cached.
  double normal() {
    if (cached_) {
      const double v = *cached_;
      cached_.reset();
      return v;
    }
    double u1 = uniform();
    while (u1 <= 0.0) u1 = uniform();
    const double u2 = uniform();
    const double radius = std::sqrt(-2.0 * std::log(u1));
    const double angle = 2.0 * std::numbers::pi * u2;
    cached_ = radius * std::sin(angle);
    return radius * std::cos(angle);
  }

private:
  std::mt19937_64 engine_;
  std::optional<double> cached_;
};

}  // namespace vlcsim
