#pragma once

#include <cmath>
#include <cstdint>

namespace acsm {

// Counter-seeded xoshiro256++ stream with a Box-Muller normal source.
// Each Monte Carlo draw index gets its own stream derived from (seed, index),
// so results do not depend on how draws are distributed over threads.
inline constexpr const char* kGeneratorId = "xoshiro256++/box-muller/v1";

namespace detail {
inline std::uint64_t splitmix64(std::uint64_t& state) {
  state += 0x9E3779B97F4A7C15ull;
  std::uint64_t z = state;
  z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
  z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
  return z ^ (z >> 31);
}
inline std::uint64_t rotl(std::uint64_t x, int k) {
  return (x << k) | (x >> (64 - k));
}
}  // namespace detail

class RngStream {
 public:
  static RngStream for_draw(std::uint64_t seed, std::uint64_t index) {
    RngStream r;
    std::uint64_t st = seed ^ (index * 0xD1B54A32D192ED03ull + 0x8CB92BA72F3D8DD7ull);
    // One warm-up keeps nearby (seed, index) pairs from sharing low-entropy states.
    detail::splitmix64(st);
    for (auto& w : r.s_) w = detail::splitmix64(st);
    if ((r.s_[0] | r.s_[1] | r.s_[2] | r.s_[3]) == 0) r.s_[0] = 1;
    return r;
  }

  std::uint64_t next_u64() {
    std::uint64_t result = detail::rotl(s_[0] + s_[3], 23) + s_[0];
    std::uint64_t t = s_[1] << 17;
    s_[2] ^= s_[0];
    s_[3] ^= s_[1];
    s_[1] ^= s_[2];
    s_[0] ^= s_[3];
    s_[2] ^= t;
    s_[3] = detail::rotl(s_[3], 45);
    return result;
  }

  // Uniform on (0, 1]; never returns 0, so it is safe under log().
  double next_unit() {
    return static_cast<double>((next_u64() >> 11) + 1) * 0x1p-53;
  }

  // Standard normal via Box-Muller; the second member of each pair is cached.
  double next_gaussian() {
    if (have_spare_) {
      have_spare_ = false;
      return spare_;
    }
    double u1 = next_unit();
    double u2 = next_unit();
    double r = std::sqrt(-2.0 * std::log(u1));
    double a = 6.283185307179586476925286766559 * u2;
    spare_ = r * std::sin(a);
    have_spare_ = true;
    return r * std::cos(a);
  }

 private:
  std::uint64_t s_[4] = {0, 0, 0, 0};
  double spare_ = 0.0;
  bool have_spare_ = false;
};

}  // namespace acsm
