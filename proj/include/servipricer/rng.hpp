#pragma once

// Seeded random streams. Every stream is derived deterministically from a
// master seed plus integer tags (machine index, path index, role), so results
// are reproducible and independent of worker count and scheduling.

#include <cstdint>
#include <random>

namespace servipricer {

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}
}  // namespace detail

inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t a, std::uint64_t b = 0) {
  std::uint64_t s = detail::splitmix64(master ^ detail::splitmix64(a));
  return detail::splitmix64(s ^ detail::splitmix64(b ^ 0xa0761d6478bd642fULL));
}

class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : eng_(seed) {}

  // uniform on the open interval (0,1)
  double uniform() {
    for (;;) {
      double u = (eng_() >> 11) * 0x1.0p-53;
      if (u > 0.0 && u < 1.0) return u;
    }
  }

  double gamma(double shape, double scale) {
    std::gamma_distribution<double> d(shape, scale);
    return d(eng_);
  }

  std::mt19937_64& engine() { return eng_; }

 private:
  std::mt19937_64 eng_;
};

}  // namespace servipricer
