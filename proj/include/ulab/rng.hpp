#pragma once

#include <cmath>
#include <cstdint>
#include <string>

namespace ulab {

// Counter-based generator: every draw is a pure function of (seed, stream, counter),
// so parallel schedules and call reordering across tasks cannot change results.
// The mix is SplitMix64 applied to the packed key.
class CounterRng {
 public:
  CounterRng(std::uint64_t seed, std::uint64_t stream) : seed_(seed), stream_(stream) {}

  CounterRng(std::uint64_t seed, const std::string& task) : seed_(seed), stream_(fnv1a(task)) {}

  static std::uint64_t fnv1a(const std::string& s) {
    std::uint64_t h = 1469598103934665603ull;
    for (unsigned char c : s) {
      h ^= c;
      h *= 1099511628211ull;
    }
    return h;
  }

  std::uint64_t u64() {
    std::uint64_t z = seed_ + 0x9e3779b97f4a7c15ull * (counter_++);
    z ^= stream_ + 0x632be59bd9b4e019ull;
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
    return z ^ (z >> 31);
  }

  // Uniform in [a, b).
  double uniform(double a = 0.0, double b = 1.0) {
    return a + (b - a) * (double(u64() >> 11) * 0x1.0p-53);
  }

  // Standard normal via Box-Muller (platform-independent, unlike std::normal_distribution).
  double normal() {
    if (have_cached_) {
      have_cached_ = false;
      return cached_;
    }
    double u1 = 0.0;
    while (u1 <= 1e-300) u1 = uniform();
    double u2 = uniform();
    double r = std::sqrt(-2.0 * std::log(u1));
    cached_ = r * std::sin(6.283185307179586 * u2);
    have_cached_ = true;
    return r * std::cos(6.283185307179586 * u2);
  }

  int uniform_int(int lo, int hi) {  // inclusive bounds
    return lo + int(u64() % std::uint64_t(hi - lo + 1));
  }

 private:
  std::uint64_t seed_, stream_, counter_ = 0;
  bool have_cached_ = false;
  double cached_ = 0.0;
};

}  // namespace ulab
