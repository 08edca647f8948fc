#pragma once

#include <cmath>
#include <cstdint>

namespace acb::rng {

constexpr uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

// splitmix64 finalizer; bijective on 64-bit words.
constexpr uint64_t hash64(uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

// Folds any number of components into one well-mixed key. This is how all
// sub-streams are derived: mix(seed, tag, index, time) and so on. Results are
// reproducible no matter where or in which order the stream is consumed.
template <typename... Rest>
constexpr uint64_t mix(uint64_t first, Rest... rest) {
  uint64_t acc = hash64(first + kGolden);
  ((acc = hash64(acc ^ (static_cast<uint64_t>(rest) + kGolden))), ...);
  return acc;
}

// Counter-based stream: the splitmix64 sequence started at a mixed key.
// Construction is two instructions, so a fresh stream per key is the normal
// usage pattern.
class Stream {
 public:
  explicit Stream(uint64_t seed) : state_(seed) {}

  uint64_t next_u64() {
    state_ += kGolden;
    return hash64(state_);
  }

  // Uniform on [0, 1).
  double next_unit() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
  }

  // One value per call (Box-Muller without the cached spare), so every draw
  // consumes exactly two engine steps.
  double next_gaussian() {
    const double u1 =
        (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;  // (0, 1]
    const double u2 =
        static_cast<double>(next_u64() >> 11) * 0x1.0p-53;  // [0, 1)
    constexpr double kTwoPi = 6.283185307179586476925286766559;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(kTwoPi * u2);
  }

  // Uniform integer in [0, n); n must be positive.
  long next_below(long n) {
    const auto wide = static_cast<unsigned __int128>(next_u64()) *
                      static_cast<unsigned __int128>(n);
    return static_cast<long>(wide >> 64);
  }

 private:
  uint64_t state_;
};

// Single keyed N(0,1) draw.
inline double normal_at(uint64_t key) { return Stream(key).next_gaussian(); }

}  // namespace acb::rng
